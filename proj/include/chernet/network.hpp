#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <utility>
#include <vector>

namespace chernet {

class ConnectivityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Undirected sensor graph on nodes 0..L-1.
class NetworkGraph {
public:
    NetworkGraph() = default;
    /// Rejects self-loops, duplicate edges and out-of-range endpoints.
    NetworkGraph(std::size_t nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

    std::size_t size() const { return adjacency_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
    /// Sorted neighbor list of `node` (excludes the node itself).
    const std::vector<std::size_t>& neighbors(std::size_t node) const { return adjacency_[node]; }
    std::size_t degree(std::size_t node) const { return adjacency_[node].size(); }
    bool has_edge(std::size_t a, std::size_t b) const;

    bool connected() const;

    static NetworkGraph path(std::size_t nodes);
    static NetworkGraph ring(std::size_t nodes);
    static NetworkGraph complete(std::size_t nodes);
    static NetworkGraph star(std::size_t nodes);

private:
    std::vector<std::vector<std::size_t>> adjacency_;
    std::vector<std::pair<std::size_t, std::size_t>> edges_;
};

/// Hop distances from `source`; unreachable nodes get SIZE_MAX.
std::vector<std::size_t> bfs_distances(const NetworkGraph& g, std::size_t source);

/// Longest shortest path (d^G). Throws ConnectivityError on a disconnected graph.
std::size_t diameter(const NetworkGraph& g);

/// Minimum eccentricity over all roots (h^G): the height of the shallowest
/// spanning tree, attained by a BFS tree rooted at a graph center.
std::size_t radius(const NetworkGraph& g);

/// Edge-list text: header `L <count>`, then one `a b` pair per line,
/// 0-based. Blank lines and lines starting with '#' are ignored.
NetworkGraph read_edge_list(std::istream& in);
void write_edge_list(std::ostream& out, const NetworkGraph& g);

/// Dense row-major square matrix.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

    static Matrix identity(std::size_t n);
    /// 11^T / n
    static Matrix averaging(std::size_t n);

    std::size_t size() const { return n_; }
    double operator()(std::size_t r, std::size_t c) const { return a_[r * n_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return a_[r * n_ + c]; }
    const double* row(std::size_t r) const { return a_.data() + r * n_; }

    Matrix operator-(const Matrix& rhs) const;
    Matrix operator+(const Matrix& rhs) const;
    Matrix operator*(double s) const;

    double max_abs_diff(const Matrix& rhs) const;

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

/// C = A * B. Rows are distributed over OpenMP threads.
Matrix multiply(const Matrix& a, const Matrix& b);
/// Single-threaded reference for multiply(); same summation order, same bits.
Matrix multiply_serial(const Matrix& a, const Matrix& b);
/// A^p by repeated multiplication (p - 1 products); A^0 is the identity.
Matrix matrix_power(const Matrix& a, std::size_t p);

/// Consensus weights W with w_{l,j} > 0 exactly on neighbors and the diagonal.
class WeightMatrix {
public:
    WeightMatrix() = default;
    explicit WeightMatrix(Matrix w) : w_(std::move(w)) {}
    const Matrix& matrix() const { return w_; }
    std::size_t size() const { return w_.size(); }
    double operator()(std::size_t r, std::size_t c) const { return w_(r, c); }

private:
    Matrix w_;
};

/// w_{l,j} = 1 / (1 + max(deg l, deg j)) on edges, residual on the diagonal.
/// Symmetric and doubly stochastic on any graph.
WeightMatrix metropolis_weights(const NetworkGraph& g);

struct SpectralEstimate {
    double value = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

/// Power iteration for the spectral radius. Each iteration applies A twice
/// and measures the growth, so a +/- eigenvalue pair of equal modulus still
/// converges. Non-convergence returns the best estimate with converged=false.
SpectralEstimate spectral_radius(const Matrix& a, double tol = 1e-10, std::size_t max_iter = 10'000);

struct WeightReport {
    bool row_ok = false;
    bool col_ok = false;
    bool support_ok = false;
    SpectralEstimate deviation_radius;  // R(W - 11^T/L)
    bool ok() const {
        return row_ok && col_ok && support_ok && deviation_radius.value < 1.0;
    }
};

WeightReport validate_weights(const Matrix& w, const NetworkGraph& g, double tol = 1e-12);

/// eta(W) = min_{i != j} sum_k min(w_ik, w_jk). A 1x1 matrix has eta = 1.
double ergodic_coefficient(const Matrix& w);

/// Sufficient conditions for the consensus phase not to
/// dominate the detection time.
struct CctConditionReport {
    double eta = 0.0;                 // eta(W)
    double eta_h = 0.0;               // eta(W^h)
    std::size_t h = 0;
    std::vector<double> lhs;          // I(i) * |log max_j I(j)| per hypothesis
    double rhs_i = 0.0;               // |log(1 - eta(W^h))| / h
    double rhs_ii = 0.0;              // |log(1 - eta(W)^h)| / h
    double rhs_iii = 0.0;             // |log(1 - eta(W))|
    bool cond_i = false;
    bool cond_ii = false;
    bool cond_iii = false;
    /// 0 < eta(W^h) < 1. Fails only in the degenerate case W^h = 11^T/L
    /// (eta = 1, exact agreement after h rounds), flagged separately.
    bool eta_h_interior = false;
    bool exact_consensus = false;
};

/// Throws std::logic_error when eta(W^h) lies outside (0, 1] or equals 1
/// without W^h being the averaging matrix.
CctConditionReport check_cct_conditions(const std::vector<double>& capability_totals,
                                        const WeightMatrix& w, std::size_t h);

}  // namespace chernet
