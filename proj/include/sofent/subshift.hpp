#pragma once

// Subshifts over Z and Z^2, Bernoulli/Markov measures, and the classical
// entropy quantities used as oracles: h_top via the transfer matrix, Shannon
// entropy, Kolmogorov-Sinai entropy, and empirical information functions.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sofent/group.hpp"
#include "sofent/rng.hpp"

namespace sofent {

using symbol_t = std::uint8_t;

struct Alphabet {
    int size = 2;
};

struct Pattern {
    FiniteSubset shape;
    std::vector<symbol_t> labels;  // aligned with shape.elems

    Pattern() = default;
    Pattern(FiniteSubset s, std::vector<symbol_t> l) : shape(std::move(s)), labels(std::move(l)) {
        if (shape.size() != labels.size())
            throw std::invalid_argument("Pattern: labels must cover the shape");
    }
};

enum class ShiftKind { Full, Sft };

// Nearest-neighbour subshifts: over Z a single allowed-transition matrix, over
// Z^2 one matrix per axis (entry [a][b] == 1 allows symbol b one step in the
// positive direction after symbol a).
struct Subshift {
    Group group;
    int alphabet = 2;
    ShiftKind kind = ShiftKind::Full;
    std::vector<std::vector<std::uint8_t>> transitions_h;  // Z: the only matrix
    std::vector<std::vector<std::uint8_t>> transitions_v;  // Z2 vertical axis

    bool allowed_h(symbol_t a, symbol_t b) const {
        return kind == ShiftKind::Full || transitions_h[a][b] != 0;
    }
    bool allowed_v(symbol_t a, symbol_t b) const {
        return kind == ShiftKind::Full || transitions_v[a][b] != 0;
    }
};

inline void validate_transition_matrix(const std::vector<std::vector<std::uint8_t>>& t, int k) {
    if (static_cast<int>(t.size()) != k)
        throw std::invalid_argument("subshift: transition matrix must be alphabet x alphabet");
    for (const auto& row : t)
        if (static_cast<int>(row.size()) != k)
            throw std::invalid_argument("subshift: transition matrix must be square");
    for (int i = 0; i < k; ++i) {
        bool row_ok = false, col_ok = false;
        for (int j = 0; j < k; ++j) {
            if (t[i][j] > 1) throw std::invalid_argument("subshift: transition entries must be 0/1");
            row_ok |= t[i][j] != 0;
            col_ok |= t[j][i] != 0;
        }
        if (!row_ok || !col_ok)
            throw std::invalid_argument("subshift: wandering letter " + std::to_string(i) +
                                        " (empty transition row or column)");
    }
}

inline Subshift full_shift(const Group& g, int k) {
    if (k < 1) throw std::invalid_argument("full_shift: alphabet must be nonempty");
    return Subshift{g, k, ShiftKind::Full, {}, {}};
}

inline Subshift sft_shift(const Group& g, int k, std::vector<std::vector<std::uint8_t>> th,
                          std::vector<std::vector<std::uint8_t>> tv = {}) {
    if (k < 1) throw std::invalid_argument("sft_shift: alphabet must be nonempty");
    validate_transition_matrix(th, k);
    if (g.kind == GroupKind::Z2) {
        if (tv.empty()) tv = th;
        validate_transition_matrix(tv, k);
    } else {
        tv.clear();
    }
    return Subshift{g, k, ShiftKind::Sft, std::move(th), std::move(tv)};
}

// Binary shift forbidding the word 11.
inline Subshift golden_mean_shift(const Group& g = group_z()) {
    return sft_shift(g, 2, {{1, 1}, {1, 0}});
}

// True iff no forbidden local pattern occurs inside p.
inline bool pattern_admissible(const Subshift& X, const Pattern& p) {
    for (auto v : p.labels)
        if (v >= X.alphabet) throw std::invalid_argument("pattern_admissible: symbol out of alphabet");
    if (X.kind == ShiftKind::Full) return true;
    const Group& g = p.shape.group;
    GroupElement e1 = make_element(g, 1, 0);
    for (std::size_t i = 0; i < p.shape.size(); ++i) {
        std::size_t j = p.shape.index_of(compose(p.shape.elems[i], e1));
        if (j != FiniteSubset::npos && !X.allowed_h(p.labels[i], p.labels[j])) return false;
        if (g.rank() == 2) {
            std::size_t jv = p.shape.index_of(compose(p.shape.elems[i], make_element(g, 0, 1)));
            if (jv != FiniteSubset::npos && !X.allowed_v(p.labels[i], p.labels[jv])) return false;
        }
    }
    return true;
}

// Spectral radius of a nonnegative square matrix by power iteration. The
// identity shift keeps periodic transition graphs from making the norm ratio
// oscillate: rho(T + I) = rho(T) + 1 for nonnegative T.
inline double spectral_radius(const std::vector<std::vector<std::uint8_t>>& t,
                              double rel_tol = 1e-12) {
    const std::size_t k = t.size();
    std::vector<double> x(k, 1.0), y(k, 0.0);
    double ratio = 0.0, prev = -1.0;
    for (int it = 0; it < 1000000; ++it) {
        double norm = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            double s = x[i];  // the +I shift
            for (std::size_t j = 0; j < k; ++j) s += double(t[i][j]) * x[j];
            y[i] = s;
            norm += s;
        }
        double xnorm = 0.0;
        for (auto v : x) xnorm += v;
        ratio = norm / xnorm;
        for (std::size_t i = 0; i < k; ++i) x[i] = y[i] / norm;
        if (prev >= 0 && std::abs(ratio - prev) <= rel_tol * ratio) break;
        prev = ratio;
    }
    return ratio - 1.0;
}

// Classical topological entropy in nats. Full shifts: log k for any supported
// group. Z nearest-neighbour SFTs: log of the Perron eigenvalue of the
// transition matrix. Z^2 SFT entropy has no general oracle and is refused.
inline double classical_topological_entropy(const Subshift& X) {
    if (X.kind == ShiftKind::Full) return std::log(double(X.alphabet));
    if (X.group.kind == GroupKind::Z2)
        throw std::invalid_argument(
            "classical_topological_entropy: no exact oracle for Z2 subshifts of finite type");
    double lambda = spectral_radius(X.transitions_h, 1e-13);
    if (lambda <= 0)
        throw std::invalid_argument("classical_topological_entropy: empty subshift");
    return std::log(lambda);
}

// -sum w log w with 0 log 0 = 0.
inline double shannon_entropy(const std::vector<double>& weights) {
    double h = 0.0;
    for (double w : weights) {
        if (w < 0) throw std::invalid_argument("shannon_entropy: negative weight");
        if (w > 0) h -= w * std::log(w);
    }
    return h;
}

enum class MeasureKind { Bernoulli, Markov };

struct MeasureModel {
    MeasureKind kind = MeasureKind::Bernoulli;
    std::vector<double> weights;               // Bernoulli site weights
    std::vector<std::vector<double>> P;        // Markov transition matrix
    std::vector<double> pi;                    // Markov stationary vector

    int alphabet() const {
        return kind == MeasureKind::Bernoulli ? static_cast<int>(weights.size())
                                              : static_cast<int>(pi.size());
    }
};

inline MeasureModel bernoulli_measure(std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (w < 0) throw std::invalid_argument("bernoulli_measure: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("bernoulli_measure: weights must sum to 1");
    MeasureModel m;
    m.kind = MeasureKind::Bernoulli;
    m.weights = std::move(weights);
    return m;
}

inline MeasureModel markov_measure(std::vector<std::vector<double>> P, std::vector<double> pi) {
    const std::size_t k = P.size();
    if (pi.size() != k) throw std::invalid_argument("markov_measure: dimension mismatch");
    double pisum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (P[i].size() != k) throw std::invalid_argument("markov_measure: P must be square");
        double row = 0.0;
        for (double v : P[i]) {
            if (v < 0) throw std::invalid_argument("markov_measure: negative entry");
            row += v;
        }
        if (std::abs(row - 1.0) > 1e-12)
            throw std::invalid_argument("markov_measure: row " + std::to_string(i) +
                                        " of P must sum to 1");
        if (pi[i] < 0) throw std::invalid_argument("markov_measure: negative stationary entry");
        pisum += pi[i];
    }
    if (std::abs(pisum - 1.0) > 1e-12)
        throw std::invalid_argument("markov_measure: stationary vector must sum to 1");
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += pi[i] * P[i][j];
        if (std::abs(s - pi[j]) > 1e-10)
            throw std::invalid_argument("markov_measure: pi is not stationary for P");
    }
    MeasureModel m;
    m.kind = MeasureKind::Markov;
    m.P = std::move(P);
    m.pi = std::move(pi);
    return m;
}

// Kolmogorov-Sinai entropy of the shift with this measure, in closed form.
inline double ks_entropy(const MeasureModel& m) {
    if (m.kind == MeasureKind::Bernoulli) return shannon_entropy(m.weights);
    double h = 0.0;
    for (std::size_t i = 0; i < m.pi.size(); ++i) {
        double row = 0.0;
        for (double p : m.P[i])
            if (p > 0) row -= p * std::log(p);
        h += m.pi[i] * row;
    }
    return h;
}

// Measure of the cylinder {x : x|shape = pattern}. Markov requires the shape
// to be a contiguous interval in Z.
inline double cylinder_measure(const MeasureModel& m, const Pattern& p) {
    for (auto v : p.labels)
        if (v >= m.alphabet()) throw std::invalid_argument("cylinder_measure: symbol out of alphabet");
    if (m.kind == MeasureKind::Bernoulli) {
        double v = 1.0;
        for (auto s : p.labels) v *= m.weights[s];
        return v;
    }
    const auto& es = p.shape.elems;
    if (p.shape.group.kind != GroupKind::Z)
        throw std::invalid_argument("cylinder_measure: Markov cylinders need a Z interval shape");
    for (std::size_t i = 1; i < es.size(); ++i)
        if (es[i].c[0] != es[i - 1].c[0] + 1)
            throw std::invalid_argument("cylinder_measure: Markov cylinders need a contiguous interval");
    double v = m.pi[p.labels[0]];
    for (std::size_t i = 1; i < p.labels.size(); ++i) v *= m.P[p.labels[i - 1]][p.labels[i]];
    return v;
}

struct InformationSampleReport {
    double mean = 0.0;             // Monte-Carlo mean of (1/|F|) I_mu(Q^F)
    double l1_distance = 0.0;      // Monte-Carlo estimate of E | (1/|F|) I - h |
    double entropy = 0.0;          // the KS entropy the samples are compared to
    std::vector<double> samples;
};

// Draws i.i.d. configurations on F from mu and evaluates the normalized
// information function -(1/|F|) log mu(cylinder) per sample.
inline InformationSampleReport information_function_samples(const MeasureModel& m,
                                                            const FiniteSubset& F,
                                                            std::size_t n_samples,
                                                            std::uint64_t seed) {
    if (n_samples == 0)
        throw std::invalid_argument("information_function_samples: need at least one sample");
    if (F.empty()) throw std::invalid_argument("information_function_samples: empty window");
    const std::size_t n = F.size();
    if (m.kind == MeasureKind::Markov) {
        if (F.group.kind != GroupKind::Z)
            throw std::invalid_argument("information_function_samples: Markov sampling needs Z");
        for (std::size_t i = 1; i < n; ++i)
            if (F.elems[i].c[0] != F.elems[i - 1].c[0] + 1)
                throw std::invalid_argument(
                    "information_function_samples: Markov sampling needs an interval window");
    }
    const int k = m.alphabet();
    InformationSampleReport rep;
    rep.entropy = ks_entropy(m);
    rep.samples.reserve(n_samples);
    CounterRng rng{seed, 0};
    auto draw = [&](double u, const std::vector<double>& probs) {
        double acc = 0.0;
        for (int v = 0; v < k; ++v) {
            acc += probs[v];
            if (u < acc) return static_cast<symbol_t>(v);
        }
        return static_cast<symbol_t>(k - 1);
    };
    double sum = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        double info = 0.0;
        if (m.kind == MeasureKind::Bernoulli) {
            for (std::size_t j = 0; j < n; ++j) {
                symbol_t v = draw(rng.uniform(i * n + j), m.weights);
                info -= std::log(m.weights[v]);
            }
        } else {
            symbol_t prev = draw(rng.uniform(i * n), m.pi);
            info -= std::log(m.pi[prev]);
            for (std::size_t j = 1; j < n; ++j) {
                symbol_t v = draw(rng.uniform(i * n + j), m.P[prev]);
                info -= std::log(m.P[prev][v]);
                prev = v;
            }
        }
        double val = info / double(n);
        rep.samples.push_back(val);
        sum += val;
        l1 += std::abs(val - rep.entropy);
    }
    rep.mean = sum / double(n_samples);
    rep.l1_distance = l1 / double(n_samples);
    return rep;
}

}  // namespace sofent
