#pragma once

// Independent references for the genetic search: an additive fitness whose
// optimum is found by exhaustive scan, and a chi-square goodness-of-fit test.

#include <boost/math/distributions/chi_squared.hpp>

#include <map>
#include <random>
#include <vector>

#include "nl2sql360/aas.hpp"

namespace nl2sql360::test_support {

/// Per-layer, per-option weights drawn from a seeded generator.
inline std::vector<std::vector<double>> additive_weights(const aas::SearchSpace& space, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> w;
    for (const auto& layer : space.layers()) {
        w.emplace_back();
        for (std::size_t i = 0; i < layer.options.size(); ++i) w.back().push_back(u(rng));
    }
    return w;
}

inline double additive_score(const std::vector<std::vector<double>>& w, const aas::Genome& g) {
    double s = 0;
    for (std::size_t i = 0; i < g.choice.size(); ++i) s += w[i][g.choice[i]];
    return s;
}

/// Score of every valid genome, as a cached table would hold it.
inline std::map<aas::Genome, double> additive_table(const aas::SearchSpace& space,
                                                    const std::vector<std::vector<double>>& w) {
    std::map<aas::Genome, double> out;
    for (const auto& g : aas::enumerate_space(space)) out[g] = additive_score(w, g);
    return out;
}

inline std::pair<aas::Genome, double> exhaustive_best(const std::map<aas::Genome, double>& table) {
    auto best = table.begin();
    for (auto it = table.begin(); it != table.end(); ++it)
        if (it->second > best->second) best = it;
    return *best;
}

/// Upper-tail p-value of Pearson's statistic for observed counts against
/// expected probabilities (categories with zero probability must be empty).
inline double chi_square_p(const std::vector<double>& observed, const std::vector<double>& probs) {
    double total = 0;
    for (double o : observed) total += o;
    double stat = 0;
    int df = -1;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (probs[i] == 0) {
            if (observed[i] != 0) return 0.0;
            continue;
        }
        const double e = probs[i] * total;
        stat += (observed[i] - e) * (observed[i] - e) / e;
        ++df;
    }
    if (df < 1) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), stat));
}

/// Closed-form probability of the ordered pair (i, j) under roulette draws
/// without replacement from `pool`.
inline double pair_probability(const std::vector<double>& f, const std::vector<std::size_t>& pool, std::size_t i,
                               std::size_t j) {
    double total = 0;
    for (auto k : pool) total += f[k];
    return f[i] / total * f[j] / (total - f[i]);
}

}  // namespace nl2sql360::test_support
