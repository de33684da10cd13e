#include "nhawkes/model.hpp"

#include "nhawkes/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace nhawkes {

namespace {

constexpr double kMuLower = 1e-6;
constexpr double kMuUpper = 20.0;
constexpr double kAlphaLower = 0.0;
constexpr double kAlphaUpper = 1.0 - 1e-6;
constexpr double kUniAlphaLower = 1e-6;
constexpr double kBetaLower = 1e-4;
constexpr double kBetaUpper = 50.0;
constexpr double kLambdaLower = 1e-6;
constexpr double kLambdaUpper = 20.0;

Slot free_slot(double lower, double upper) {
    return Slot{SlotKind::Free, 0.0, lower, upper};
}

} // namespace

std::string to_string(UniModel model) {
    switch (model) {
    case UniModel::QMu: return "Q_mu";
    case UniModel::QAlpha: return "Q_alpha";
    case UniModel::QBeta: return "Q_beta";
    case UniModel::QLambda0: return "Q_lambda0";
    case UniModel::Full: return "Q";
    }
    return "?";
}

UniModel uni_model_from_string(const std::string& name) {
    if (name == "Q_mu" || name == "mu") return UniModel::QMu;
    if (name == "Q_alpha" || name == "alpha") return UniModel::QAlpha;
    if (name == "Q_beta" || name == "beta") return UniModel::QBeta;
    if (name == "Q_lambda0" || name == "lambda0") return UniModel::QLambda0;
    if (name == "Q" || name == "full") return UniModel::Full;
    throw ConfigError("unknown univariate model '" + name + "'");
}

ModelSpec::ModelSpec(int d) : d_(d) {
    if (d < 1) {
        throw ConfigError("model dimension must be at least 1");
    }
    const auto du = static_cast<std::size_t>(d);
    slots_.reserve(2 * du + du * du + 1);
    for (int i = 0; i < d; ++i) {
        slots_.push_back(free_slot(kMuLower, kMuUpper));
    }
    for (int k = 0; k < d * d; ++k) {
        slots_.push_back(free_slot(d == 1 ? kUniAlphaLower : kAlphaLower, kAlphaUpper));
    }
    for (int i = 0; i < d; ++i) {
        slots_.push_back(free_slot(kBetaLower, kBetaUpper));
    }
    slots_.push_back(free_slot(kLambdaLower, kLambdaUpper));
}

ModelSpec ModelSpec::full(int d) {
    return ModelSpec(d);
}

ModelSpec ModelSpec::univariate(UniModel model, double known_value) {
    ModelSpec spec(1);
    switch (model) {
    case UniModel::QMu: spec.set_fixed(spec.mu_slot(0), known_value); break;
    case UniModel::QAlpha: spec.set_fixed(spec.alpha_slot(0, 0), known_value); break;
    case UniModel::QBeta: spec.set_fixed(spec.beta_slot(0), known_value); break;
    case UniModel::QLambda0: spec.set_fixed(spec.lambda0_slot(), known_value); break;
    case UniModel::Full: break;
    }
    spec.validate();
    return spec;
}

ModelSpec ModelSpec::with_support(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
    if (mask.rows() != mask.cols() || mask.rows() < 1) {
        throw ConfigError("support mask must be square");
    }
    const int d = static_cast<int>(mask.rows());
    ModelSpec spec(d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (!mask(i, j)) {
                spec.set_zero(spec.alpha_slot(i, j));
            }
        }
    }
    spec.apply_beta_convention();
    return spec;
}

std::size_t ModelSpec::mu_slot(int i) const {
    if (i < 0 || i >= d_) throw std::out_of_range("mu index");
    return static_cast<std::size_t>(i);
}

std::size_t ModelSpec::alpha_slot(int i, int j) const {
    if (i < 0 || i >= d_ || j < 0 || j >= d_) throw std::out_of_range("alpha index");
    return static_cast<std::size_t>(d_ + i * d_ + j);
}

std::size_t ModelSpec::beta_slot(int i) const {
    if (i < 0 || i >= d_) throw std::out_of_range("beta index");
    return static_cast<std::size_t>(d_ + d_ * d_ + i);
}

std::size_t ModelSpec::lambda0_slot() const {
    return static_cast<std::size_t>(2 * d_ + d_ * d_);
}

std::string ModelSpec::slot_name(std::size_t index) const {
    const auto d = static_cast<std::size_t>(d_);
    if (index < d) {
        return d_ == 1 ? "mu" : "mu_" + std::to_string(index + 1);
    }
    if (index < d + d * d) {
        const auto k = index - d;
        if (d_ == 1) return "alpha";
        return "alpha_" + std::to_string(k / d + 1) + std::to_string(k % d + 1);
    }
    if (index < 2 * d + d * d) {
        return d_ == 1 ? "beta" : "beta_" + std::to_string(index - d - d * d + 1);
    }
    if (index == lambda0_slot()) {
        return "lambda0";
    }
    throw std::out_of_range("slot index");
}

void ModelSpec::set_free(std::size_t index) {
    auto& s = slots_.at(index);
    s.kind = SlotKind::Free;
    s.value = 0.0;
}

void ModelSpec::set_free(std::size_t index, double lower, double upper) {
    if (!(lower <= upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
        throw ConfigError("invalid bounds for " + slot_name(index));
    }
    auto& s = slots_.at(index);
    s.kind = SlotKind::Free;
    s.value = 0.0;
    s.lower = lower;
    s.upper = upper;
}

void ModelSpec::set_fixed(std::size_t index, double value) {
    auto& s = slots_.at(index);
    s.kind = SlotKind::Fixed;
    s.value = value;
}

void ModelSpec::set_zero(std::size_t index) {
    if (index >= beta_slot(0) && index < lambda0_slot()) {
        throw ConfigError("beta entries cannot be structurally zero");
    }
    auto& s = slots_.at(index);
    s.kind = SlotKind::Zero;
    s.value = 0.0;
}

bool ModelSpec::alpha_row_is_zero(int i) const {
    for (int j = 0; j < d_; ++j) {
        const auto& s = slots_[alpha_slot(i, j)];
        if (!(s.kind == SlotKind::Zero || (s.kind == SlotKind::Fixed && s.value == 0.0))) {
            return false;
        }
    }
    return true;
}

void ModelSpec::apply_beta_convention() {
    for (int i = 0; i < d_; ++i) {
        if (alpha_row_is_zero(i)) {
            set_fixed(beta_slot(i), 1.0);
        }
    }
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> ModelSpec::support() const {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(d_, d_);
    for (int i = 0; i < d_; ++i) {
        for (int j = 0; j < d_; ++j) {
            const auto& s = slots_[alpha_slot(i, j)];
            mask(i, j) = !(s.kind == SlotKind::Zero || (s.kind == SlotKind::Fixed && s.value == 0.0));
        }
    }
    return mask;
}

void ModelSpec::validate() const {
    std::size_t n_free = 0;
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        const auto& s = slots_[k];
        if (s.kind == SlotKind::Free) {
            ++n_free;
            if (!(s.lower <= s.upper)) {
                throw ConfigError("empty bounds for " + slot_name(k));
            }
        } else if (s.kind == SlotKind::Fixed && !std::isfinite(s.value)) {
            throw ConfigError("fixed value of " + slot_name(k) + " is not finite");
        }
    }
    if (n_free == 0) {
        throw ConfigError("model has no free parameter");
    }
    for (int i = 0; i < d_; ++i) {
        const auto& b = slots_[beta_slot(i)];
        if (b.kind == SlotKind::Zero || (b.kind == SlotKind::Fixed && !(b.value > 0.0))) {
            throw ConfigError("fixed beta entries must be positive");
        }
        const auto& m = slots_[mu_slot(i)];
        if (m.kind == SlotKind::Fixed && m.value < 0.0) {
            throw ConfigError("fixed mu entries must be non-negative");
        }
        for (int j = 0; j < d_; ++j) {
            const auto& a = slots_[alpha_slot(i, j)];
            if (a.kind == SlotKind::Fixed && a.value < 0.0) {
                throw ConfigError("fixed alpha entries must be non-negative");
            }
        }
    }
    const auto& l = slots_[lambda0_slot()];
    if (l.kind == SlotKind::Fixed && l.value < 0.0) {
        throw ConfigError("fixed lambda0 must be non-negative");
    }
    if (d_ == 1) {
        const auto& a = slots_[alpha_slot(0, 0)];
        if (a.kind == SlotKind::Fixed && !(a.value > 0.0 && a.value < 1.0)) {
            throw ConfigError("univariate fixed alpha must lie in (0, 1)");
        }
    }
}

std::vector<std::size_t> ModelSpec::free_slots() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        if (slots_[k].kind == SlotKind::Free) {
            out.push_back(k);
        }
    }
    return out;
}

Eigen::VectorXd ModelSpec::lower_bounds() const {
    const auto idx = free_slots();
    Eigen::VectorXd lo(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        lo(static_cast<Eigen::Index>(k)) = slots_[idx[k]].lower;
    }
    return lo;
}

Eigen::VectorXd ModelSpec::upper_bounds() const {
    const auto idx = free_slots();
    Eigen::VectorXd hi(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        hi(static_cast<Eigen::Index>(k)) = slots_[idx[k]].upper;
    }
    return hi;
}

Eigen::VectorXd ModelSpec::full_vector(const Eigen::VectorXd& free_values) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(slots_.size()));
    Eigen::Index next = 0;
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        const auto& s = slots_[k];
        double x = 0.0;
        switch (s.kind) {
        case SlotKind::Free:
            if (next >= free_values.size()) {
                throw ConfigError("too few free values for model");
            }
            x = free_values(next++);
            break;
        case SlotKind::Fixed: x = s.value; break;
        case SlotKind::Zero: x = 0.0; break;
        }
        v(static_cast<Eigen::Index>(k)) = x;
    }
    if (next != free_values.size()) {
        throw ConfigError("too many free values for model");
    }
    return v;
}

NoisyHawkesParams ModelSpec::assemble(const Eigen::VectorXd& free_values) const {
    return params_from_vector(d_, full_vector(free_values));
}

Eigen::VectorXd ModelSpec::free_values(const NoisyHawkesParams& params) const {
    if (params.dim() != d_) {
        throw ConfigError("parameter dimension does not match model");
    }
    const Eigen::VectorXd all = params_to_vector(params);
    const auto idx = free_slots();
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        out(static_cast<Eigen::Index>(k)) = all(static_cast<Eigen::Index>(idx[k]));
    }
    return out;
}

bool ModelSpec::respects_structure(const NoisyHawkesParams& params) const {
    if (params.dim() != d_) {
        return false;
    }
    const Eigen::VectorXd all = params_to_vector(params);
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        const auto& s = slots_[k];
        const double x = all(static_cast<Eigen::Index>(k));
        if (s.kind == SlotKind::Fixed && x != s.value) return false;
        if (s.kind == SlotKind::Zero && x != 0.0) return false;
    }
    return true;
}

bool ModelSpec::operator==(const ModelSpec& other) const {
    if (d_ != other.d_) return false;
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        const auto& a = slots_[k];
        const auto& b = other.slots_[k];
        if (a.kind != b.kind || a.value != b.value || a.lower != b.lower || a.upper != b.upper) {
            return false;
        }
    }
    return true;
}

Eigen::VectorXd params_to_vector(const NoisyHawkesParams& params) {
    const int d = params.dim();
    Eigen::VectorXd v(2 * d + d * d + 1);
    Eigen::Index k = 0;
    for (int i = 0; i < d; ++i) v(k++) = params.mu(i);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) v(k++) = params.alpha(i, j);
    }
    for (int i = 0; i < d; ++i) v(k++) = params.beta(i);
    v(k) = params.lambda0;
    return v;
}

NoisyHawkesParams params_from_vector(int d, const Eigen::VectorXd& v) {
    if (v.size() != 2 * d + d * d + 1) {
        throw ConfigError("parameter vector has wrong length");
    }
    NoisyHawkesParams p;
    p.mu.resize(d);
    p.alpha.resize(d, d);
    p.beta.resize(d);
    Eigen::Index k = 0;
    for (int i = 0; i < d; ++i) p.mu(i) = v(k++);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) p.alpha(i, j) = v(k++);
    }
    for (int i = 0; i < d; ++i) p.beta(i) = v(k++);
    p.lambda0 = v(k);
    return p;
}

namespace {

void read_entry(ModelSpec& spec, std::size_t slot, const nlohmann::json& e) {
    if (e.is_string()) {
        const auto s = e.get<std::string>();
        if (s == "free") {
            spec.set_free(slot);
        } else if (s == "zero") {
            spec.set_zero(slot);
        } else {
            throw ConfigError("model entry must be \"free\", \"zero\" or a number, got '" + s + "'");
        }
    } else if (e.is_number()) {
        spec.set_fixed(slot, e.get<double>());
    } else {
        throw ConfigError("model entry for " + spec.slot_name(slot) + " has an invalid type");
    }
}

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) {
        throw ConfigError(std::string("model file lacks '") + key + "'");
    }
    return j.at(key);
}

void read_vector(ModelSpec& spec, const nlohmann::json& j, const char* key,
                 std::size_t (ModelSpec::*slot_of)(int) const) {
    if (!j.contains(key)) {
        return;
    }
    const auto& arr = j.at(key);
    const int d = spec.dim();
    if (d == 1 && !arr.is_array()) {
        read_entry(spec, (spec.*slot_of)(0), arr);
        return;
    }
    if (!arr.is_array() || static_cast<int>(arr.size()) != d) {
        throw ConfigError(std::string("model entry '") + key + "' must have d entries");
    }
    for (int i = 0; i < d; ++i) {
        read_entry(spec, (spec.*slot_of)(i), arr[static_cast<std::size_t>(i)]);
    }
}

} // namespace

ModelSpec model_from_json(const nlohmann::json& j) {
    try {
        const int d = require(j, "d").get<int>();
        ModelSpec spec(d);
        if (j.contains("bounds")) {
            const auto& b = j.at("bounds");
            auto apply = [&](const char* key, auto slots) {
                if (!b.contains(key)) return;
                const auto lo = b.at(key).at(0).template get<double>();
                const auto hi = b.at(key).at(1).template get<double>();
                for (auto k : slots) spec.set_free(k, lo, hi);
            };
            std::vector<std::size_t> mu, alpha, beta;
            for (int i = 0; i < d; ++i) {
                mu.push_back(spec.mu_slot(i));
                beta.push_back(spec.beta_slot(i));
                for (int c = 0; c < d; ++c) alpha.push_back(spec.alpha_slot(i, c));
            }
            apply("mu", mu);
            apply("alpha", alpha);
            apply("beta", beta);
            apply("lambda0", std::vector<std::size_t>{spec.lambda0_slot()});
        }
        read_vector(spec, j, "mu", &ModelSpec::mu_slot);
        read_vector(spec, j, "beta", &ModelSpec::beta_slot);
        if (j.contains("alpha")) {
            const auto& a = j.at("alpha");
            if (d == 1 && !a.is_array()) {
                read_entry(spec, spec.alpha_slot(0, 0), a);
            } else {
                if (!a.is_array() || static_cast<int>(a.size()) != d) {
                    throw ConfigError("model entry 'alpha' must be a d x d array");
                }
                for (int i = 0; i < d; ++i) {
                    const auto& row = a[static_cast<std::size_t>(i)];
                    if (d == 1 && !row.is_array()) {
                        read_entry(spec, spec.alpha_slot(0, 0), row);
                        continue;
                    }
                    if (!row.is_array() || static_cast<int>(row.size()) != d) {
                        throw ConfigError("model entry 'alpha' must be a d x d array");
                    }
                    for (int c = 0; c < d; ++c) {
                        read_entry(spec, spec.alpha_slot(i, c), row[static_cast<std::size_t>(c)]);
                    }
                }
            }
        }
        if (j.contains("lambda0")) {
            read_entry(spec, spec.lambda0_slot(), j.at("lambda0"));
        }
        if (j.value("beta_convention", true)) {
            spec.apply_beta_convention();
        }
        if (j.contains("free_bounds")) {
            for (const auto& [name, range] : j.at("free_bounds").items()) {
                std::size_t k = 0;
                while (k < spec.slot_count() && spec.slot_name(k) != name) ++k;
                if (k == spec.slot_count() || spec.slot(k).kind != SlotKind::Free) {
                    throw ConfigError("free_bounds names an unknown or non-free entry '" + name + "'");
                }
                spec.set_free(k, range.at(0).get<double>(), range.at(1).get<double>());
            }
        }
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed model file: ") + e.what());
    }
}

nlohmann::json model_to_json(const ModelSpec& spec) {
    auto entry = [&](std::size_t k) -> nlohmann::json {
        const auto& s = spec.slot(k);
        switch (s.kind) {
        case SlotKind::Free: return "free";
        case SlotKind::Zero: return "zero";
        case SlotKind::Fixed: return s.value;
        }
        return nullptr;
    };
    const int d = spec.dim();
    nlohmann::json j;
    j["d"] = d;
    nlohmann::json mu = nlohmann::json::array();
    nlohmann::json beta = nlohmann::json::array();
    nlohmann::json alpha = nlohmann::json::array();
    nlohmann::json bounds = nlohmann::json::object();
    for (int i = 0; i < d; ++i) {
        mu.push_back(entry(spec.mu_slot(i)));
        beta.push_back(entry(spec.beta_slot(i)));
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < d; ++c) row.push_back(entry(spec.alpha_slot(i, c)));
        alpha.push_back(row);
    }
    j["mu"] = mu;
    j["alpha"] = alpha;
    j["beta"] = beta;
    j["lambda0"] = entry(spec.lambda0_slot());
    nlohmann::json slots = nlohmann::json::object();
    for (auto k : spec.free_slots()) {
        slots[spec.slot_name(k)] = {spec.slot(k).lower, spec.slot(k).upper};
    }
    j["free_bounds"] = slots;
    return j;
}

ModelSpec load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open model file '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

} // namespace nhawkes
