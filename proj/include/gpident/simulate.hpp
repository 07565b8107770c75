#pragma once

#include "gpident/dictionary.hpp"
#include "gpident/trajdata.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace gpident {

enum class PDEKind { AdvectionDiffusion, Burgers, Fisher, KdV, Custom };

/// One right-hand-side term C(x, t) * f(u).
struct PDETerm {
    FeatureSpec feature;
    CoefficientField coeff;
};

/// u_t = sum of terms on a periodic domain, sampled on `grid`.
struct PDEProblem {
    PDEKind kind = PDEKind::Custom;
    std::string name;
    Grid grid;
    std::function<double(double)> initial;
    std::vector<PDETerm> terms;
    std::vector<std::string> true_support;
    std::map<std::string, CoefficientField> true_coeff_fields;
};

/// Builds a problem whose terms are (label, coefficient) pairs; the true support
/// and coefficient map follow the same labels.
PDEProblem make_problem(PDEKind kind, std::string name, Grid grid, std::function<double(double)> initial,
                        const std::vector<std::pair<std::string, CoefficientField>>& terms);

struct SolveOptions {
    int substeps = 0;      // RK4 steps per output interval; 0 picks one from the stability estimate
    double safety = 0.25;  // fraction of the RK4 stability limit used by the automatic choice
    bool dealias = true;   // 2/3-rule truncation of the state and right-hand side
};

/// Substeps per output interval keeping h * rho below safety * 2.5, where rho
/// bounds the spectral radius of the linearised right-hand side at t = 0.
/// The count is then doubled until doubling it again moves the first few
/// output steps by less than tol in max norm.
int auto_substeps(const PDEProblem& problem, double safety = 0.25, bool dealias = true, double tol = 1e-8);

/// Method of lines: Fourier differentiation in space, classical RK4 in time.
/// Throws std::runtime_error naming the time when the state stops being finite.
Trajectory solve(const PDEProblem& problem, const SolveOptions& opts = {});

/// u_t = a'(x) u + a(x) u_x + 0.1 u_xx, a(x) = -1.5 + cos(2 pi x / 5).
PDEProblem make_advection_diffusion();

/// u_t = a(x, t) u u_x + b(t) u_xx on [-2, 2) x [0, 0.02].
PDEProblem make_burgers();

/// u_t = 0.5 u_xx + a(t) u - a(t) u^2 on [-5, 5) x [0, 0.8].
PDEProblem make_fisher();

/// u_t = a(x, t) u u_x + b(x, t) u_xxx on [-2, 2) x [0, 0.1]. The initial
/// profile defaults to kdv_default_initial.
PDEProblem make_kdv(std::function<double(double)> initial = {});

/// Smooth multi-mode profile used for the KdV preset.
double kdv_default_initial(double x);

std::vector<std::string> preset_names();

/// Preset by name ("advection_diffusion", "burgers", "fisher", "kdv").
PDEProblem make_preset(const std::string& name);

/// Fourier differentiation on a periodic grid. Derivatives are taken from the
/// spectrum, truncated to |j| <= (n - 1) / 3 when dealiasing is on; the
/// Nyquist mode is always dropped from odd derivatives.
class SpectralOps {
public:
    SpectralOps(int n, double length, bool dealias);
    ~SpectralOps();
    SpectralOps(const SpectralOps&) = delete;
    SpectralOps& operator=(const SpectralOps&) = delete;

    /// out[o] = d^o u / dx^o for o = 0..max_order.
    void derivatives(const Eigen::VectorXd& u, int max_order, std::vector<Eigen::VectorXd>& out);

    /// Removes the modes outside the retained band (no-op without dealiasing).
    void project(Eigen::VectorXd& v);

    /// Largest retained wavenumber.
    double k_max() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace gpident
