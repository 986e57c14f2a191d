#pragma once

/// @file aas.hpp
/// @brief Genetic search over a layered design space of NL2SQL pipelines.
///
/// A space file looks like
///
///     {"layers": [{"name": "prompting", "options": ["zero_shot", "few_shot_similarity"]}, ...],
///      "forbidden": [{"prompting": "zero_shot", "generation.decoding": "beam"}],
///      "api_backbone": false}
///
/// Each forbidden entry is a partial assignment; a genome matching all of its
/// pairs is invalid. With "api_backbone" set, constrained decoding is
/// additionally invalid.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2sql360/benchmark.hpp"
#include "nl2sql360/run_log.hpp"
#include "nl2sql360/scenario.hpp"

namespace nl2sql360::aas {

struct Layer {
    std::string name;
    std::vector<std::string> options;
};

/// Partial assignment layer -> option that no genome may contain.
using ForbiddenCombination = std::map<std::string, std::string>;

/// One option index per layer.
struct Genome {
    std::vector<std::size_t> choice;

    bool operator==(const Genome&) const = default;
    bool operator<(const Genome& o) const { return choice < o.choice; }
};

class SearchSpace {
  public:
    /// Throws InvalidSearchSpace on an empty layer list, an empty or
    /// duplicated option set, duplicate layer names, or a forbidden entry
    /// naming an unknown layer or option.
    SearchSpace(std::vector<Layer> layers, std::vector<ForbiddenCombination> forbidden = {},
                bool api_backbone = false);

    /// Seven layers, 720 assignments, nothing forbidden.
    static SearchSpace default_space(bool api_backbone = false);
    static SearchSpace from_json(const nlohmann::json& j);
    static SearchSpace load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    const std::vector<Layer>& layers() const { return layers_; }
    bool api_backbone() const { return api_backbone_; }
    /// Number of assignments, valid or not.
    std::size_t size() const;

    bool valid(const Genome& g) const;
    /// Options joined by "|", in layer order.
    std::string key(const Genome& g) const;
    /// Inverse of key(); throws FormatError.
    Genome parse_key(const std::string& key) const;
    const std::string& option(const Genome& g, std::size_t layer) const { return layers_[layer].options[g.choice[layer]]; }

  private:
    std::vector<Layer> layers_;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> forbidden_;
    std::vector<ForbiddenCombination> forbidden_source_;
    bool api_backbone_ = false;
    std::ptrdiff_t decoding_layer_ = -1;
    std::ptrdiff_t constrained_option_ = -1;
};

/// Every valid genome once, in lexicographic order of option indices.
std::vector<Genome> enumerate_space(const SearchSpace& space);

struct GaParams {
    int population_size = 10;
    int generations = 20;
    double swap_probability = 0.5;
    double mutation_probability = 0.2;
    int elitism_count = 1;
    std::uint64_t seed = 0;

    /// Throws FormatError on N < 2, T < 1, probabilities outside [0,1] or
    /// elitism not in [0, N).
    void validate() const;
    nlohmann::json to_json() const;
};

using Rng = std::mt19937_64;
using Population = std::vector<Genome>;
using FitnessFn = std::function<double(const Genome&)>;

/// N genomes drawn uniformly from the valid ones. Throws NoValidGenome.
Population init_population(const SearchSpace& space, int size, Rng& rng);

/// Two distinct indices drawn in proportion to fitness, without replacement.
/// A unique lowest-fitness member is left out of the pool when at least two
/// others remain. Zero total fitness falls back to uniform draws.
std::pair<std::size_t, std::size_t> select_pair(const std::vector<double>& fitness, Rng& rng);

/// Per layer, with probability p_s, exchange the two genomes' options; an
/// exchange that makes either genome invalid is undone.
std::pair<Genome, Genome> swap_modules(const Genome& a, const Genome& b, double p_s, const SearchSpace& space,
                                       Rng& rng);

/// Per layer, with probability p_m, replace the option by a different one
/// drawn uniformly; a replacement that makes the genome invalid is undone.
Genome mutate(const Genome& g, double p_m, const SearchSpace& space, Rng& rng);

struct Generation {
    Population population;
    std::vector<double> fitness;
};

struct SearchResult {
    Genome best;
    double best_fitness = 0;
    /// Generation 0 is the initial population, followed by T offspring
    /// generations.
    std::vector<Generation> generations;
    /// Highest fitness within each generation.
    std::vector<double> best_trace;
    /// Distinct genomes evaluated.
    std::size_t evaluations = 0;

    nlohmann::json to_json(const SearchSpace& space) const;
};

/// Runs the search. Fitness is evaluated once per distinct genome; any
/// failure is rethrown as FitnessError naming the genome. Fitness must be
/// non-negative.
SearchResult evolve(const SearchSpace& space, const GaParams& params, const FitnessFn& fitness);

/// Scores keyed by genome key, read from a CSV of `key,score` rows (an
/// optional header row is skipped).
class FitnessTable {
  public:
    FitnessTable(const SearchSpace& space, std::map<Genome, double> scores);
    static FitnessTable load(const SearchSpace& space, const std::filesystem::path& path);

    /// Throws FitnessError for genomes without a score.
    double operator()(const Genome& g) const;
    std::size_t size() const { return scores_.size(); }

  private:
    SearchSpace space_;
    std::map<Genome, double> scores_;
};

enum class TargetMetric { Ex, Em, Ves };

TargetMetric target_metric_from_string(const std::string& s);

/// Fitness by running the executor on cached predictions: the genome with key
/// "a|b|c" reads `<dir>/a+b+c.json` (or `.txt`), is run on `subset`, and
/// scores the target metric (EX and EM as fractions, VES on its 0-100 scale).
/// Run logs go to `<log_dir>/<a+b+c>.jsonl` and are reused on a rerun.
FitnessFn testbed_fitness(const SearchSpace& space, const Benchmark& benchmark, const Subset& subset,
                          const ExecutionConfig& config, const std::filesystem::path& prediction_dir,
                          const std::filesystem::path& log_dir, TargetMetric metric);

/// File-name form of a genome key.
std::string file_stem(const std::string& key);

}  // namespace nl2sql360::aas
