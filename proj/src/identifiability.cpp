#include "nhawkes/identifiability.hpp"

#include "nhawkes/error.hpp"
#include "nhawkes/json_io.hpp"
#include "nhawkes/rng.hpp"
#include "nhawkes/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace nhawkes {

namespace {

void require_dim(const NoisyHawkesParams& theta, int d, const char* what) {
    theta.validate();
    if (theta.dim() != d) {
        throw ConfigError(std::string(what) + " needs a " + std::to_string(d) + "-dimensional tuple");
    }
}

void require_tau(const TauRange& range, double tau) {
    if (tau == 0.0) {
        return;
    }
    if (!(tau > range.lo && tau < range.hi)) {
        std::ostringstream msg;
        msg << "tau = " << tau << " outside the admissible range (" << range.lo << ", " << range.hi << ")";
        throw ConfigError(msg.str());
    }
}

struct UniMapped {
    double mu;
    double alpha;
    double beta;
};

UniMapped uni_map(double mu, double alpha, double beta, double tau) {
    const double m = mu / (1.0 - alpha);
    const double kappa = m * beta * beta * alpha * (2.0 - alpha);
    const double c = beta * (1.0 - alpha);
    const double s = std::sqrt(c * c + kappa / (m - tau));
    return {c * (m - tau) / s, 1.0 - c / s, s};
}

double row_kappa(const NoisyHawkesParams& t, double tau) {
    const double mu1 = t.mu(0);
    const double mu2 = t.mu(1);
    const double a11 = t.alpha(0, 0);
    const double a12 = t.alpha(0, 1);
    const double s = mu1 + mu2 * a12;
    return (s * a11 * (2.0 - a11) * (mu2 - tau) - tau * mu2 * a12 * a12 * (1.0 - a11)) /
           ((mu2 - tau) * (s - tau * (1.0 - a11)));
}

} // namespace

TauRange uni_tau_range(const NoisyHawkesParams& theta) {
    require_dim(theta, 1, "uni_tau_range");
    if (!(theta.alpha(0, 0) < 1.0)) {
        throw ConfigError("alpha must be below 1");
    }
    return {-theta.lambda0, theta.mu(0) / (1.0 - theta.alpha(0, 0)), true};
}

NoisyHawkesParams uni_equivalent(const NoisyHawkesParams& theta, double tau) {
    const TauRange range = uni_tau_range(theta);
    require_tau(range, tau);
    if (tau == 0.0) {
        return theta;
    }
    const auto m = uni_map(theta.mu(0), theta.alpha(0, 0), theta.beta(0), tau);
    return NoisyHawkesParams::univariate(m.mu, m.alpha, m.beta, theta.lambda0 + tau);
}

TauRange biv_diag_tau_range(const NoisyHawkesParams& theta) {
    require_dim(theta, 2, "biv_diag_tau_range");
    if (theta.alpha(0, 1) != 0.0 || theta.alpha(1, 0) != 0.0) {
        throw ConfigError("diagonal map needs a diagonal interaction matrix");
    }
    if (!(theta.alpha(0, 0) < 1.0 && theta.alpha(1, 1) < 1.0)) {
        throw ConfigError("diagonal interactions must be below 1");
    }
    const double hi = std::min(theta.mu(0) / (1.0 - theta.alpha(0, 0)),
                               theta.mu(1) / (1.0 - theta.alpha(1, 1)));
    return {-theta.lambda0, hi, true};
}

NoisyHawkesParams biv_equivalent_diag(const NoisyHawkesParams& theta, double tau) {
    const TauRange range = biv_diag_tau_range(theta);
    require_tau(range, tau);
    if (tau == 0.0) {
        return theta;
    }
    NoisyHawkesParams out = theta;
    for (int i = 0; i < 2; ++i) {
        if (theta.alpha(i, i) == 0.0) {
            out.mu(i) = theta.mu(i) - tau;
        } else {
            const auto m = uni_map(theta.mu(i), theta.alpha(i, i), theta.beta(i), tau);
            out.mu(i) = m.mu;
            out.alpha(i, i) = m.alpha;
            out.beta(i) = m.beta;
        }
    }
    out.lambda0 = theta.lambda0 + tau;
    return out;
}

TauRange biv_row_tau_range(const NoisyHawkesParams& theta) {
    require_dim(theta, 2, "biv_row_tau_range");
    const double a11 = theta.alpha(0, 0);
    const double a12 = theta.alpha(0, 1);
    if (theta.alpha(1, 0) != 0.0 || theta.alpha(1, 1) != 0.0) {
        throw ConfigError("row map needs a vanishing second row");
    }
    if (!(a11 > 0.0 && a11 < 1.0 && a12 > 0.0)) {
        throw ConfigError("row map needs 0 < alpha11 < 1 and alpha12 > 0");
    }
    const double mu1 = theta.mu(0);
    const double mu2 = theta.mu(1);
    const double s = (mu1 + mu2 * a12) * a11 * (2.0 - a11);
    const double third = s * mu2 / (s + mu2 * (1.0 - a11) * a12 * a12);
    return {-theta.lambda0, std::min({mu1 / (1.0 - a11), mu2, third}), true};
}

NoisyHawkesParams biv_equivalent_row(const NoisyHawkesParams& theta, double tau) {
    const TauRange range = biv_row_tau_range(theta);
    require_tau(range, tau);
    if (tau == 0.0) {
        return theta;
    }
    const double kappa = row_kappa(theta, tau);
    if (!(kappa > 0.0)) {
        throw ConfigError("row map is undefined for this tau (kappa <= 0)");
    }
    const double a11 = theta.alpha(0, 0);
    const double r = std::sqrt((1.0 - a11) * (1.0 - a11) + kappa);
    NoisyHawkesParams out = theta;
    out.mu(0) = (theta.mu(0) - tau * (1.0 - a11)) / r;
    out.mu(1) = theta.mu(1) - tau;
    out.alpha(0, 0) = 1.0 - (1.0 - a11) / r;
    out.alpha(0, 1) = theta.mu(1) * theta.alpha(0, 1) / ((theta.mu(1) - tau) * r);
    out.beta(0) = theta.beta(0) * r;
    out.lambda0 = theta.lambda0 + tau;
    return out;
}

NoisyHawkesParams swap_components(const NoisyHawkesParams& theta) {
    require_dim(theta, 2, "swap_components");
    NoisyHawkesParams out = theta;
    out.mu = theta.mu.reverse();
    out.beta = theta.beta.reverse();
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            out.alpha(i, j) = theta.alpha(1 - i, 1 - j);
        }
    }
    return out;
}

TauRange biv_row_second_tau_range(const NoisyHawkesParams& theta) {
    return biv_row_tau_range(swap_components(theta));
}

NoisyHawkesParams biv_equivalent_row_second(const NoisyHawkesParams& theta, double tau) {
    return swap_components(biv_equivalent_row(swap_components(theta), tau));
}

RowConstants row_constants(const NoisyHawkesParams& theta) {
    require_dim(theta, 2, "row_constants");
    const double mu1 = theta.mu(0);
    const double mu2 = theta.mu(1);
    const double a11 = theta.alpha(0, 0);
    const double a12 = theta.alpha(0, 1);
    const double b1 = theta.beta(0);
    const double m1 = (mu1 + mu2 * a12) / (1.0 - a11);
    RowConstants k;
    k.a = mu2 + theta.lambda0;
    k.b = mu2 * b1 * a12;
    k.c = b1 * (1.0 - a11);
    k.d = m1 + theta.lambda0;
    k.e = m1 * b1 * b1 * a11 * (2.0 - a11) + mu2 * b1 * b1 * a12 * a12;
    return k;
}

SupportPattern classify_support(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
    if (mask.rows() != 2 || mask.cols() != 2) {
        return SupportPattern::Unclassified;
    }
    const bool a11 = mask(0, 0);
    const bool a12 = mask(0, 1);
    const bool a21 = mask(1, 0);
    const bool a22 = mask(1, 1);
    if (!a12 && !a21) return SupportPattern::Diagonal;
    if (a11 && a12 && !a21 && !a22) return SupportPattern::FirstRowOnly;
    if (!a11 && !a12 && a21 && a22) return SupportPattern::SecondRowOnly;
    if (!a12 && !a22 && a21) return SupportPattern::Situation1;
    if (!a11 && !a21 && a12) return SupportPattern::Situation2;
    if (!a12 && a11 && a21 && a22) return SupportPattern::Situation3;
    if (!a21 && a11 && a12 && a22) return SupportPattern::Situation4;
    return SupportPattern::Unclassified;
}

bool is_non_identifiable(SupportPattern pattern) {
    return pattern == SupportPattern::Diagonal || pattern == SupportPattern::FirstRowOnly ||
           pattern == SupportPattern::SecondRowOnly;
}

bool is_identifiable(SupportPattern pattern) {
    return pattern == SupportPattern::Situation1 || pattern == SupportPattern::Situation2 ||
           pattern == SupportPattern::Situation3 || pattern == SupportPattern::Situation4;
}

std::string to_string(SupportPattern pattern) {
    switch (pattern) {
    case SupportPattern::Diagonal: return "diagonal";
    case SupportPattern::FirstRowOnly: return "first_row_only";
    case SupportPattern::SecondRowOnly: return "second_row_only";
    case SupportPattern::Situation1: return "situation_1";
    case SupportPattern::Situation2: return "situation_2";
    case SupportPattern::Situation3: return "situation_3";
    case SupportPattern::Situation4: return "situation_4";
    case SupportPattern::Unclassified: return "unclassified";
    }
    return "?";
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0 && hi > lo) || n < 2) {
        throw ConfigError("log grid needs 0 < lo < hi and at least two points");
    }
    std::vector<double> grid(n);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t k = 0; k < n; ++k) {
        grid[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
    }
    return grid;
}

double spectral_discrepancy(const NoisyHawkesParams& a, const NoisyHawkesParams& b,
                            const std::vector<double>& grid) {
    if (a.dim() != b.dim()) {
        throw ConfigError("cannot compare spectra of different dimensions");
    }
    auto rel = [](cplx x, cplx y) {
        const double scale = std::max(std::abs(x), std::abs(y));
        return scale == 0.0 ? 0.0 : std::abs(x - y) / scale;
    };
    double worst = 0.0;
    for (double nu : grid) {
        if (a.dim() == 1) {
            worst = std::max(worst, rel(spectral_density_uni(a, nu), spectral_density_uni(b, nu)));
            continue;
        }
        const SpectralMatrix fa = a.dim() == 2 ? spectral_density_biv(a, nu) : spectral_density_exp(a, nu);
        const SpectralMatrix fb = b.dim() == 2 ? spectral_density_biv(b, nu) : spectral_density_exp(b, nu);
        for (Eigen::Index i = 0; i < fa.values.rows(); ++i) {
            for (Eigen::Index j = 0; j < fa.values.cols(); ++j) {
                worst = std::max(worst, rel(fa.values(i, j), fb.values(i, j)));
            }
        }
    }
    return worst;
}

double normalized_distance(const ModelSpec& spec, const NoisyHawkesParams& a, const NoisyHawkesParams& b) {
    const Eigen::VectorXd va = params_to_vector(a);
    const Eigen::VectorXd vb = params_to_vector(b);
    double sum = 0.0;
    for (std::size_t k = 0; k < spec.slot_count(); ++k) {
        const auto& s = spec.slot(k);
        const auto ki = static_cast<Eigen::Index>(k);
        const double diff = va(ki) - vb(ki);
        if (diff == 0.0) continue;
        double width = s.upper - s.lower;
        if (s.kind != SlotKind::Free || !(width > 0.0)) {
            width = ModelSpec(spec.dim()).slot(k).upper - ModelSpec(spec.dim()).slot(k).lower;
        }
        sum += (diff / width) * (diff / width);
    }
    return std::sqrt(sum);
}

namespace {

constexpr double kProbeMuLo = 0.2;
constexpr double kProbeMuHi = 3.0;
constexpr double kProbeAlphaLo = 0.05;
constexpr double kProbeAlphaHi = 0.8;
constexpr double kProbeBetaLo = 0.2;
constexpr double kProbeBetaHi = 5.0;
constexpr double kProbeLambdaLo = 0.05;
constexpr double kProbeLambdaHi = 3.0;
constexpr double kProbeMaxRadius = 0.9;

struct ProbeBox {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

ProbeBox probe_box(const ModelSpec& spec) {
    const auto slots = spec.free_slots();
    ProbeBox box{Eigen::VectorXd(static_cast<Eigen::Index>(slots.size())),
                 Eigen::VectorXd(static_cast<Eigen::Index>(slots.size()))};
    for (std::size_t k = 0; k < slots.size(); ++k) {
        const std::size_t s = slots[k];
        double lo = kProbeLambdaLo;
        double hi = kProbeLambdaHi;
        if (s < spec.alpha_slot(0, 0)) {
            lo = kProbeMuLo;
            hi = kProbeMuHi;
        } else if (s < spec.beta_slot(0)) {
            lo = kProbeAlphaLo;
            hi = kProbeAlphaHi;
        } else if (s < spec.lambda0_slot()) {
            lo = kProbeBetaLo;
            hi = kProbeBetaHi;
        }
        const auto ki = static_cast<Eigen::Index>(k);
        box.lo(ki) = std::max(lo, spec.slot(s).lower);
        box.hi(ki) = std::min(hi, spec.slot(s).upper);
    }
    return box;
}

bool admissible(const NoisyHawkesParams& p) {
    return spectral_radius(p.alpha) < kProbeMaxRadius;
}

bool in_box(const Eigen::VectorXd& x, const ProbeBox& box) {
    return (x.array() >= box.lo.array()).all() && (x.array() <= box.hi.array()).all();
}

NoisyHawkesParams sample_member(const ModelSpec& spec, const ProbeBox& box, Rng& rng) {
    Eigen::VectorXd x(box.lo.size());
    for (int attempt = 0; attempt < 1000; ++attempt) {
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            x(k) = rng.uniform(box.lo(k), box.hi(k));
        }
        const NoisyHawkesParams p = spec.assemble(x);
        if (admissible(p)) {
            return p;
        }
    }
    throw NumericalError("could not sample an admissible parameter for the probe");
}

NoisyHawkesParams sample_near(const ModelSpec& spec, const ProbeBox& box, const NoisyHawkesParams& base,
                              double distance, Rng& rng) {
    const Eigen::VectorXd x0 = spec.free_values(base);
    const Eigen::VectorXd width = spec.upper_bounds() - spec.lower_bounds();
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Eigen::VectorXd u(x0.size());
        for (Eigen::Index k = 0; k < u.size(); ++k) {
            // Box-Muller normal for an isotropic direction.
            const double r = std::sqrt(-2.0 * std::log(rng.uniform()));
            u(k) = r * std::cos(2.0 * std::numbers::pi * rng.uniform());
        }
        if (u.norm() == 0.0) continue;
        u /= u.norm();
        const Eigen::VectorXd x = x0 + distance * u.cwiseProduct(width);
        if (!in_box(x, box)) continue;
        const NoisyHawkesParams p = spec.assemble(x);
        if (admissible(p)) {
            return p;
        }
    }
    throw NumericalError("could not sample a nearby admissible parameter for the probe");
}

enum class WitnessKind { None, Univariate, Diagonal, FirstRow, SecondRow };

WitnessKind witness_kind(const ModelSpec& spec) {
    if (spec.dim() == 1) {
        return spec.free_count() == 4 ? WitnessKind::Univariate : WitnessKind::None;
    }
    if (spec.dim() != 2) {
        throw ConfigError("injectivity probe supports one- and two-dimensional models only");
    }
    switch (classify_support(spec.support())) {
    case SupportPattern::Diagonal: return WitnessKind::Diagonal;
    case SupportPattern::FirstRowOnly: return WitnessKind::FirstRow;
    case SupportPattern::SecondRowOnly: return WitnessKind::SecondRow;
    case SupportPattern::Situation1:
    case SupportPattern::Situation2:
    case SupportPattern::Situation3:
    case SupportPattern::Situation4: return WitnessKind::None;
    case SupportPattern::Unclassified: break;
    }
    throw ConfigError("support pattern is not covered by the identifiability results");
}

std::string describe(const ModelSpec& spec) {
    if (spec.dim() == 1) {
        for (auto k : {spec.mu_slot(0), spec.alpha_slot(0, 0), spec.beta_slot(0), spec.lambda0_slot()}) {
            if (spec.slot(k).kind != SlotKind::Free) {
                return "Q_" + spec.slot_name(k);
            }
        }
        return "Q";
    }
    return to_string(classify_support(spec.support()));
}

NoisyHawkesParams witness_partner(WitnessKind kind, const NoisyHawkesParams& theta, Rng& rng) {
    TauRange range;
    switch (kind) {
    case WitnessKind::Univariate: range = uni_tau_range(theta); break;
    case WitnessKind::Diagonal: range = biv_diag_tau_range(theta); break;
    case WitnessKind::FirstRow: range = biv_row_tau_range(theta); break;
    case WitnessKind::SecondRow: range = biv_row_second_tau_range(theta); break;
    case WitnessKind::None: throw ConfigError("no equivalence map for this model");
    }
    const double width = range.hi - range.lo;
    double tau = 0.0;
    while (std::abs(tau) < 1e-3 * width) {
        tau = range.lo + width * rng.uniform(0.02, 0.98);
    }
    switch (kind) {
    case WitnessKind::Univariate: return uni_equivalent(theta, tau);
    case WitnessKind::Diagonal: return biv_equivalent_diag(theta, tau);
    case WitnessKind::FirstRow: return biv_equivalent_row(theta, tau);
    case WitnessKind::SecondRow: return biv_equivalent_row_second(theta, tau);
    case WitnessKind::None: break;
    }
    return theta;
}

void finish(ProbeReport& report, const ProbeOptions& options) {
    report.n_pairs = report.pairs.size();
    report.min_discrepancy = std::numeric_limits<double>::infinity();
    report.min_distance = std::numeric_limits<double>::infinity();
    report.max_discrepancy = 0.0;
    for (const auto& p : report.pairs) {
        report.min_distance = std::min(report.min_distance, p.distance);
        report.max_discrepancy = std::max(report.max_discrepancy, p.discrepancy);
        const bool separated = p.distance >= options.separation;
        if (separated) {
            ++report.n_separated;
            if (p.discrepancy < options.discrepancy_floor) ++report.n_violations;
        }
        if (separated || report.witness_mode) {
            report.min_discrepancy = std::min(report.min_discrepancy, p.discrepancy);
        }
    }
}

} // namespace

ProbeReport injectivity_probe(const ModelSpec& spec, const ProbeOptions& options) {
    return injectivity_probe_union({spec}, options);
}

ProbeReport injectivity_probe_union(const std::vector<ModelSpec>& family, const ProbeOptions& options) {
    if (family.empty()) {
        throw ConfigError("probe needs at least one model");
    }
    if (options.n_pairs == 0) {
        throw ConfigError("probe needs at least one pair");
    }
    const int d = family.front().dim();
    std::vector<WitnessKind> kinds;
    std::vector<ProbeBox> boxes;
    std::string name;
    for (const auto& spec : family) {
        spec.validate();
        if (spec.dim() != d) {
            throw ConfigError("probe family mixes dimensions");
        }
        kinds.push_back(witness_kind(spec));
        boxes.push_back(probe_box(spec));
        name += (name.empty() ? "" : "+") + describe(spec);
    }
    const bool witness = kinds.front() != WitnessKind::None;
    if (witness && family.size() > 1) {
        throw ConfigError("witness mode applies to a single non-identifiable model");
    }
    if (!witness && std::any_of(kinds.begin(), kinds.end(), [](auto k) { return k != WitnessKind::None; })) {
        throw ConfigError("probe family mixes identifiable and non-identifiable models");
    }
    const ModelSpec metric = family.size() == 1 ? family.front() : ModelSpec::full(d);
    const std::vector<double> grid = log_grid(options.grid_lo, options.grid_hi, options.grid_size);

    ProbeReport report;
    report.model = name;
    report.witness_mode = witness;
    Rng master(derive_seed(options.seed, {0x50524f4245ULL}));
    for (std::size_t p = 0; p < options.n_pairs; ++p) {
        Rng rng = master.split(p);
        const std::size_t a = static_cast<std::size_t>(rng.next_u64() % family.size());
        ProbePair pair;
        pair.first = sample_member(family[a], boxes[a], rng);
        if (witness) {
            pair.second = witness_partner(kinds.front(), pair.first, rng);
        } else if (p % 2 == 0) {
            const std::size_t b = static_cast<std::size_t>(rng.next_u64() % family.size());
            pair.second = sample_member(family[b], boxes[b], rng);
        } else {
            pair.second = sample_near(family[a], boxes[a], pair.first, rng.uniform(1e-2, 5e-2), rng);
        }
        pair.distance = normalized_distance(metric, pair.first, pair.second);
        pair.discrepancy = spectral_discrepancy(pair.first, pair.second, grid);
        report.pairs.push_back(std::move(pair));
    }
    finish(report, options);
    return report;
}

nlohmann::json probe_to_json(const ProbeReport& report, bool include_pairs) {
    nlohmann::json j;
    j["model"] = report.model;
    j["witness_mode"] = report.witness_mode;
    j["n_pairs"] = report.n_pairs;
    j["n_separated"] = report.n_separated;
    j["n_violations"] = report.n_violations;
    j["min_discrepancy"] = report.min_discrepancy;
    j["max_discrepancy"] = report.max_discrepancy;
    j["min_distance"] = report.min_distance;
    if (include_pairs) {
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& p : report.pairs) {
            pairs.push_back({{"first", params_to_json(p.first)},
                             {"second", params_to_json(p.second)},
                             {"distance", p.distance},
                             {"discrepancy", p.discrepancy}});
        }
        j["pairs"] = pairs;
    }
    return j;
}

} // namespace nhawkes
