#pragma once

#include "nhawkes/params.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace nhawkes {

enum class SlotKind { Free, Fixed, Zero };

struct Slot {
    SlotKind kind{SlotKind::Free};
    double value{0.0};   ///< used when kind is Fixed
    double lower{0.0};   ///< box bounds used when kind is Free
    double upper{0.0};
};

/// The univariate submodels: one of (mu, alpha, beta, lambda0) is known.
enum class UniModel { QMu, QAlpha, QBeta, QLambda0, Full };

[[nodiscard]] std::string to_string(UniModel model);
[[nodiscard]] UniModel uni_model_from_string(const std::string& name);

/// Which entries of theta are estimated, fixed or structurally zero.
///
/// Slots are laid out as mu_0..mu_{d-1}, alpha row-major, beta_0..beta_{d-1},
/// lambda0.
class ModelSpec {
public:
    explicit ModelSpec(int d);

    /// Every entry free with the default bounds.
    [[nodiscard]] static ModelSpec full(int d);

    /// Univariate submodel with the named parameter fixed to `known_value`.
    [[nodiscard]] static ModelSpec univariate(UniModel model, double known_value);

    /// Bivariate model on the support `mask` (true = free interaction), with
    /// the beta pinning applied to all-zero rows.
    [[nodiscard]] static ModelSpec with_support(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask);

    [[nodiscard]] int dim() const noexcept { return d_; }
    [[nodiscard]] std::size_t slot_count() const noexcept { return slots_.size(); }

    [[nodiscard]] std::size_t mu_slot(int i) const;
    [[nodiscard]] std::size_t alpha_slot(int i, int j) const;
    [[nodiscard]] std::size_t beta_slot(int i) const;
    [[nodiscard]] std::size_t lambda0_slot() const;

    [[nodiscard]] const Slot& slot(std::size_t index) const { return slots_.at(index); }
    [[nodiscard]] std::string slot_name(std::size_t index) const;

    void set_free(std::size_t index);
    void set_free(std::size_t index, double lower, double upper);
    void set_fixed(std::size_t index, double value);
    void set_zero(std::size_t index);

    /// Pin beta_i = 1 for every row of alpha whose entries are all Zero.
    void apply_beta_convention();

    [[nodiscard]] bool alpha_row_is_zero(int i) const;
    [[nodiscard]] Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> support() const;

    void validate() const;

    [[nodiscard]] std::vector<std::size_t> free_slots() const;
    [[nodiscard]] std::size_t free_count() const { return free_slots().size(); }
    [[nodiscard]] Eigen::VectorXd lower_bounds() const;
    [[nodiscard]] Eigen::VectorXd upper_bounds() const;

    /// All slots as a flat vector (free slots filled from `free_values`).
    [[nodiscard]] Eigen::VectorXd full_vector(const Eigen::VectorXd& free_values) const;
    [[nodiscard]] NoisyHawkesParams assemble(const Eigen::VectorXd& free_values) const;
    [[nodiscard]] Eigen::VectorXd free_values(const NoisyHawkesParams& params) const;

    /// True when `params` honours every Fixed/Zero slot exactly.
    [[nodiscard]] bool respects_structure(const NoisyHawkesParams& params) const;

    bool operator==(const ModelSpec& other) const;

private:
    int d_;
    std::vector<Slot> slots_;
};

[[nodiscard]] Eigen::VectorXd params_to_vector(const NoisyHawkesParams& params);
[[nodiscard]] NoisyHawkesParams params_from_vector(int d, const Eigen::VectorXd& v);

/// Model files: {"d": 2, "mu": [...], "alpha": [[...]], "beta": [...],
/// "lambda0": ...} where each entry is "free", "zero" or a number (fixed),
/// plus optional "bounds": {"mu": [lo, hi], "alpha": [...], ...}.
[[nodiscard]] ModelSpec model_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json model_to_json(const ModelSpec& spec);
[[nodiscard]] ModelSpec load_model(const std::string& path);

} // namespace nhawkes
