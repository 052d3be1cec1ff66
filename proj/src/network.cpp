#include "chernet/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace chernet {

NetworkGraph::NetworkGraph(std::size_t nodes,
                           const std::vector<std::pair<std::size_t, std::size_t>>& edges)
    : adjacency_(nodes) {
    for (auto [a, b] : edges) {
        if (a >= nodes || b >= nodes) {
            std::ostringstream msg;
            msg << "edge (" << a << ", " << b << ") out of range for " << nodes << " nodes";
            throw std::invalid_argument(msg.str());
        }
        if (a == b) throw std::invalid_argument("self-loop at node " + std::to_string(a));
        if (has_edge(a, b)) {
            std::ostringstream msg;
            msg << "duplicate edge (" << a << ", " << b << ")";
            throw std::invalid_argument(msg.str());
        }
        adjacency_[a].insert(std::upper_bound(adjacency_[a].begin(), adjacency_[a].end(), b), b);
        adjacency_[b].insert(std::upper_bound(adjacency_[b].begin(), adjacency_[b].end(), a), a);
        edges_.emplace_back(std::min(a, b), std::max(a, b));
    }
}

bool NetworkGraph::has_edge(std::size_t a, std::size_t b) const {
    const auto& n = adjacency_[a];
    return std::binary_search(n.begin(), n.end(), b);
}

bool NetworkGraph::connected() const {
    if (adjacency_.empty()) return false;
    const auto dist = bfs_distances(*this, 0);
    return std::none_of(dist.begin(), dist.end(),
                        [](std::size_t d) { return d == std::numeric_limits<std::size_t>::max(); });
}

NetworkGraph NetworkGraph::path(std::size_t nodes) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i + 1 < nodes; ++i) e.emplace_back(i, i + 1);
    return NetworkGraph(nodes, e);
}

NetworkGraph NetworkGraph::ring(std::size_t nodes) {
    if (nodes < 3) return path(nodes);
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i < nodes; ++i) e.emplace_back(i, (i + 1) % nodes);
    return NetworkGraph(nodes, e);
}

NetworkGraph NetworkGraph::complete(std::size_t nodes) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i < nodes; ++i) {
        for (std::size_t j = i + 1; j < nodes; ++j) e.emplace_back(i, j);
    }
    return NetworkGraph(nodes, e);
}

NetworkGraph NetworkGraph::star(std::size_t nodes) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 1; i < nodes; ++i) e.emplace_back(0, i);
    return NetworkGraph(nodes, e);
}

std::vector<std::size_t> bfs_distances(const NetworkGraph& g, std::size_t source) {
    constexpr auto unreached = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> dist(g.size(), unreached);
    std::deque<std::size_t> queue{source};
    dist[source] = 0;
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        for (std::size_t v : g.neighbors(u)) {
            if (dist[v] == unreached) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

namespace {

std::vector<std::size_t> eccentricities(const NetworkGraph& g) {
    if (g.size() == 0) throw ConnectivityError("empty graph");
    std::vector<std::size_t> ecc(g.size());
    for (std::size_t s = 0; s < g.size(); ++s) {
        const auto dist = bfs_distances(g, s);
        const std::size_t far = *std::max_element(dist.begin(), dist.end());
        if (far == std::numeric_limits<std::size_t>::max()) {
            throw ConnectivityError("graph is not connected");
        }
        ecc[s] = far;
    }
    return ecc;
}

}  // namespace

std::size_t diameter(const NetworkGraph& g) {
    const auto ecc = eccentricities(g);
    return *std::max_element(ecc.begin(), ecc.end());
}

std::size_t radius(const NetworkGraph& g) {
    const auto ecc = eccentricities(g);
    return *std::min_element(ecc.begin(), ecc.end());
}

NetworkGraph read_edge_list(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t nodes = 0;
    bool have_header = false;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        auto fail = [&](const std::string& why) {
            throw std::invalid_argument("edge list line " + std::to_string(line_no) + ": " + why);
        };
        if (!have_header) {
            std::string tag;
            long long count = -1;
            if (!(fields >> tag >> count) || tag != "L" || count < 1) fail("expected header 'L <count>'");
            nodes = static_cast<std::size_t>(count);
            have_header = true;
            continue;
        }
        long long a = -1, b = -1;
        if (!(fields >> a >> b) || a < 0 || b < 0) fail("expected two non-negative node indices");
        std::string extra;
        if (fields >> extra) fail("trailing token '" + extra + "'");
        edges.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    }
    if (!have_header) throw std::invalid_argument("edge list: missing 'L <count>' header");
    return NetworkGraph(nodes, edges);
}

void write_edge_list(std::ostream& out, const NetworkGraph& g) {
    out << "L " << g.size() << '\n';
    for (auto [a, b] : g.edges()) out << a << ' ' << b << '\n';
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::averaging(std::size_t n) { return Matrix(n, 1.0 / static_cast<double>(n)); }

Matrix Matrix::operator-(const Matrix& rhs) const {
    Matrix out(n_);
    for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] = a_[i] - rhs.a_[i];
    return out;
}

Matrix Matrix::operator+(const Matrix& rhs) const {
    Matrix out(n_);
    for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] = a_[i] + rhs.a_[i];
    return out;
}

Matrix Matrix::operator*(double s) const {
    Matrix out(n_);
    for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] = a_[i] * s;
    return out;
}

double Matrix::max_abs_diff(const Matrix& rhs) const {
    double m = 0.0;
    for (std::size_t i = 0; i < a_.size(); ++i) m = std::max(m, std::abs(a_[i] - rhs.a_[i]));
    return m;
}

namespace {

inline void multiply_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t r) {
    const std::size_t n = a.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double ark = a(r, k);
        if (ark == 0.0) continue;
        for (std::size_t col = 0; col < n; ++col) c(r, col) += ark * b(k, col);
    }
}

}  // namespace

Matrix multiply(const Matrix& a, const Matrix& b) {
    const auto n = static_cast<std::ptrdiff_t>(a.size());
    Matrix c(a.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r) multiply_row(a, b, c, static_cast<std::size_t>(r));
    return c;
}

Matrix multiply_serial(const Matrix& a, const Matrix& b) {
    Matrix c(a.size());
    for (std::size_t r = 0; r < a.size(); ++r) multiply_row(a, b, c, r);
    return c;
}

Matrix matrix_power(const Matrix& a, std::size_t p) {
    if (p == 0) return Matrix::identity(a.size());
    Matrix out = a;
    for (std::size_t i = 1; i < p; ++i) out = multiply(out, a);
    return out;
}

WeightMatrix metropolis_weights(const NetworkGraph& g) {
    if (!g.connected()) throw ConnectivityError("metropolis_weights: graph is not connected");
    const std::size_t L = g.size();
    Matrix w(L);
    for (auto [a, b] : g.edges()) {
        const double v = 1.0 / (1.0 + static_cast<double>(std::max(g.degree(a), g.degree(b))));
        w(a, b) = v;
        w(b, a) = v;
    }
    for (std::size_t l = 0; l < L; ++l) {
        double off = 0.0;
        for (std::size_t j : g.neighbors(l)) off += w(l, j);
        w(l, l) = 1.0 - off;
    }
    return WeightMatrix(std::move(w));
}

SpectralEstimate spectral_radius(const Matrix& a, double tol, std::size_t max_iter) {
    const std::size_t n = a.size();
    SpectralEstimate est;
    if (n == 0) {
        est.converged = true;
        return est;
    }
    auto apply = [&](const std::vector<double>& x) {
        std::vector<double> y(n, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            const double* row = a.row(r);
            double s = 0.0;
            for (std::size_t c = 0; c < n; ++c) s += row[c] * x[c];
            y[r] = s;
        }
        return y;
    };
    auto norm = [](const std::vector<double>& x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return std::sqrt(s);
    };

    // Fixed, generic start vector (golden-ratio sequence) for reproducibility.
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double frac = std::fmod(static_cast<double>(i + 1) * 0.6180339887498949, 1.0);
        x[i] = 0.5 + frac;
    }
    double nx = norm(x);
    for (double& v : x) v /= nx;

    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= max_iter; ++it) {
        std::vector<double> y = apply(apply(x));
        const double ny = norm(y);
        est.iterations = it;
        if (ny == 0.0) {
            est.value = 0.0;
            est.converged = true;
            return est;
        }
        est.value = std::sqrt(ny);
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
        if (std::abs(est.value - prev) < tol) {
            est.converged = true;
            return est;
        }
        prev = est.value;
    }
    return est;
}

WeightReport validate_weights(const Matrix& w, const NetworkGraph& g, double tol) {
    const std::size_t L = w.size();
    if (g.size() != L) throw std::invalid_argument("validate_weights: matrix and graph sizes differ");
    WeightReport report;
    report.row_ok = true;
    report.col_ok = true;
    report.support_ok = true;
    for (std::size_t r = 0; r < L; ++r) {
        double row_sum = 0.0;
        double col_sum = 0.0;
        for (std::size_t c = 0; c < L; ++c) {
            row_sum += w(r, c);
            col_sum += w(c, r);
            const bool allowed = (r == c) || g.has_edge(r, c);
            if (allowed ? !(w(r, c) > 0.0) : (w(r, c) != 0.0)) report.support_ok = false;
        }
        if (std::abs(row_sum - 1.0) > tol) report.row_ok = false;
        if (std::abs(col_sum - 1.0) > tol) report.col_ok = false;
    }
    report.deviation_radius = spectral_radius(w - Matrix::averaging(L));
    return report;
}

double ergodic_coefficient(const Matrix& w) {
    const std::size_t L = w.size();
    if (L < 2) return 1.0;
    double eta = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = i + 1; j < L; ++j) {
            double overlap = 0.0;
            for (std::size_t k = 0; k < L; ++k) overlap += std::min(w(i, k), w(j, k));
            eta = std::min(eta, overlap);
        }
    }
    return eta;
}

namespace {

// |log(1 - x)| with the x >= 1 limit taken as +infinity.
double abs_log_one_minus(double x) {
    if (x >= 1.0) return std::numeric_limits<double>::infinity();
    return std::abs(std::log1p(-x));
}

}  // namespace

CctConditionReport check_cct_conditions(const std::vector<double>& capability_totals,
                                        const WeightMatrix& w, std::size_t h) {
    if (capability_totals.empty()) throw std::invalid_argument("check_cct_conditions: empty I");
    if (h == 0) throw std::invalid_argument("check_cct_conditions: radius must be >= 1");
    CctConditionReport r;
    r.h = h;
    const Matrix wh = matrix_power(w.matrix(), h);
    r.eta = ergodic_coefficient(w.matrix());
    r.eta_h = ergodic_coefficient(wh);

    const double one = 1.0 - 1e-12;
    if (!(r.eta_h > 0.0) || r.eta_h > 1.0 + 1e-12) {
        throw std::logic_error("eta(W^h) outside (0, 1] on a connected graph");
    }
    r.exact_consensus = r.eta_h >= one;
    if (r.exact_consensus && wh.max_abs_diff(Matrix::averaging(w.size())) > 1e-10) {
        throw std::logic_error("eta(W^h) = 1 but W^h is not the averaging matrix");
    }
    r.eta_h_interior = r.eta_h > 0.0 && r.eta_h < one;

    const double hd = static_cast<double>(h);
    r.rhs_i = r.exact_consensus ? std::numeric_limits<double>::infinity() : abs_log_one_minus(r.eta_h) / hd;
    r.rhs_ii = abs_log_one_minus(std::pow(r.eta, hd)) / hd;
    r.rhs_iii = abs_log_one_minus(r.eta);

    const double max_total = *std::max_element(capability_totals.begin(), capability_totals.end());
    const double log_max = std::abs(std::log(max_total));
    r.cond_i = r.cond_ii = r.cond_iii = true;
    for (double total : capability_totals) {
        const double lhs = total * log_max;
        r.lhs.push_back(lhs);
        r.cond_i = r.cond_i && lhs < r.rhs_i;
        r.cond_ii = r.cond_ii && lhs < r.rhs_ii;
        r.cond_iii = r.cond_iii && lhs < r.rhs_iii;
    }
    return r;
}

}  // namespace chernet
