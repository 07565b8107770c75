#pragma once

#include "gpident/bspline.hpp"
#include "gpident/sdd.hpp"
#include "gpident/trajdata.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gpident {

/// A candidate right-hand-side term: the product of spatial derivatives of u
/// whose orders are listed in `factors` (sorted ascending). The empty product
/// is the constant feature 1.
struct FeatureSpec {
    std::vector<int> factors;

    bool is_constant() const { return factors.empty(); }
    int max_order() const { return factors.empty() ? -1 : factors.back(); }

    /// Canonical label: "1", "u", "u_x", "u*u_x", "u^2", "u*u_xx^2", ...
    std::string label() const;

    static FeatureSpec from_label(const std::string& label);

    auto operator<=>(const FeatureSpec&) const = default;
};

/// Label of the single factor d^order u / dx^order ("u", "u_x", "u_xx", ...).
std::string derivative_label(int order);

/// The constant feature plus every multiset of 1..max_product factors drawn from
/// the orders 0..max_deriv, ordered by product size and then lexicographically.
std::vector<FeatureSpec> enumerate_dictionary(int max_deriv, int max_product);

/// Feature values sampled on the interior region used for regression.
struct FeatureFields {
    std::vector<double> x;              // interior space coordinates, length I'
    std::vector<double> t;              // interior time coordinates, length N'
    std::vector<Eigen::MatrixXd> values;  // one I' x N' field per feature
    Eigen::MatrixXd response;           // estimated u_t on the same region
};

/// Evaluates every feature and the response u_t from SDD derivatives. Each
/// derivative order is computed once; the interior drops `interior_time_trim`
/// samples at both time ends.
FeatureFields eval_features(const Trajectory& traj, const std::vector<FeatureSpec>& specs,
                            const std::optional<SavGolFilter>& filter);

/// The regression pair (A, y). Group g occupies columns [g*M, (g+1)*M); column
/// (g, m) samples f_g * B_m over interior points, flattened time-major
/// (row = n' * I' + i').
struct FeatureSystem {
    Eigen::MatrixXd A;
    Eigen::VectorXd y;
    int groups = 0;
    int M = 0;
    Eigen::VectorXd col_norms;  // norms before normalisation
    double y_norm = 1.0;
    bool normalized = false;

    Eigen::Index rows() const { return A.rows(); }
    Eigen::Index cols() const { return A.cols(); }

    /// Column block of group g.
    auto group_block(int g) const { return A.middleCols(static_cast<Eigen::Index>(g) * M, M); }

    /// Scales every column and y to unit Euclidean norm, keeping the norms.
    void normalize();

    /// Raw (un-normalised) copies of A and y.
    Eigen::MatrixXd raw_A() const;
    Eigen::VectorXd raw_y() const;
};

/// Builds the feature system from feature fields and a tensor basis, then
/// normalises it. Throws naming the feature/basis pair when a column is zero.
FeatureSystem assemble(const FeatureFields& fields, const BasisSet& basis,
                       const std::vector<std::string>& labels = {});

/// A^T A of the un-normalised system that `assemble` would build, computed
/// from the separable structure of the columns: for each pair of features the
/// pointwise product is contracted against products of spatial and then
/// temporal basis functions.
Eigen::MatrixXd tensor_gram(const FeatureFields& fields, const BasisSet& basis);

/// Rough multiply-add counts of tensor_gram and of a direct A^T A.
double tensor_gram_cost(const FeatureFields& fields, const BasisSet& basis);
double direct_gram_cost(const FeatureFields& fields, const BasisSet& basis);

/// Binary dump for offline inspection: magic "GPFS1\0\0\0", then int64 rows, cols,
/// groups, M, then A (column-major), y, col_norms and y_norm as little-endian
/// doubles, then one newline-terminated label per group.
void write_feature_system(const FeatureSystem& sys, const std::vector<std::string>& labels,
                          const std::filesystem::path& path);

}  // namespace gpident
