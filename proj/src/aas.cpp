#include "nl2sql360/aas.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "nl2sql360/error.hpp"
#include "nl2sql360/executor.hpp"
#include "nl2sql360/metrics.hpp"
#include "nl2sql360/util/csv.hpp"
#include "nl2sql360/util/files.hpp"
#include "nl2sql360/util/strings.hpp"

namespace nl2sql360::aas {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDecodingLayer = "generation.decoding";
constexpr const char* kConstrained = "constrained";

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t uniform_index(std::size_t n, Rng& rng) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::ptrdiff_t index_of(const std::vector<std::string>& v, const std::string& s) {
    const auto it = std::find(v.begin(), v.end(), s);
    return it == v.end() ? -1 : it - v.begin();
}

}  // namespace

// --- space -------------------------------------------------------------------

SearchSpace::SearchSpace(std::vector<Layer> layers, std::vector<ForbiddenCombination> forbidden, bool api_backbone)
    : layers_(std::move(layers)), forbidden_source_(std::move(forbidden)), api_backbone_(api_backbone) {
    if (layers_.empty()) throw InvalidSearchSpace("search space has no layers");
    std::vector<std::string> names;
    for (const auto& layer : layers_) {
        if (layer.options.empty()) throw InvalidSearchSpace("layer '" + layer.name + "' has no options");
        if (index_of(names, layer.name) >= 0) throw InvalidSearchSpace("duplicate layer '" + layer.name + "'");
        names.push_back(layer.name);
        std::set<std::string> seen(layer.options.begin(), layer.options.end());
        if (seen.size() != layer.options.size())
            throw InvalidSearchSpace("layer '" + layer.name + "' lists an option twice");
    }
    for (const auto& combo : forbidden_source_) {
        if (combo.empty()) throw InvalidSearchSpace("empty forbidden combination");
        std::vector<std::pair<std::size_t, std::size_t>> rule;
        for (const auto& [layer, opt] : combo) {
            const auto li = index_of(names, layer);
            if (li < 0) throw InvalidSearchSpace("forbidden combination names unknown layer '" + layer + "'");
            const auto oi = index_of(layers_[static_cast<std::size_t>(li)].options, opt);
            if (oi < 0) throw InvalidSearchSpace("layer '" + layer + "' has no option '" + opt + "'");
            rule.emplace_back(static_cast<std::size_t>(li), static_cast<std::size_t>(oi));
        }
        forbidden_.push_back(std::move(rule));
    }
    decoding_layer_ = index_of(names, kDecodingLayer);
    if (decoding_layer_ >= 0)
        constrained_option_ = index_of(layers_[static_cast<std::size_t>(decoding_layer_)].options, kConstrained);
}

SearchSpace SearchSpace::default_space(bool api_backbone) {
    return SearchSpace({{"pre_processing.schema_linking", {"none", "linking_on"}},
                        {"pre_processing.db_content", {"none", "content_on"}},
                        {"prompting", {"zero_shot", "few_shot_similarity"}},
                        {"generation.multi_step", {"none", "skeleton_then_sql", "subquery_then_sql"}},
                        {"generation.intermediate_rep", {"none", "natsql_tag"}},
                        {"generation.decoding", {"greedy", "beam", "constrained"}},
                        {"post_processing",
                         {"none", "self_correction", "self_consistency", "exec_guided_selector", "n_best_rerank"}}},
                       {}, api_backbone);
}

SearchSpace SearchSpace::from_json(const json& j) {
    try {
        std::vector<Layer> layers;
        for (const auto& l : j.at("layers"))
            layers.push_back({l.at("name").get<std::string>(), l.at("options").get<std::vector<std::string>>()});
        std::vector<ForbiddenCombination> forbidden;
        if (j.contains("forbidden"))
            for (const auto& f : j.at("forbidden")) forbidden.push_back(f.get<ForbiddenCombination>());
        return SearchSpace(std::move(layers), std::move(forbidden), j.value("api_backbone", false));
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed search space: ") + e.what());
    }
}

SearchSpace SearchSpace::load(const fs::path& path) { return from_json(util::read_json_file(path)); }

json SearchSpace::to_json() const {
    json layers = json::array();
    for (const auto& l : layers_) layers.push_back({{"name", l.name}, {"options", l.options}});
    json forbidden = json::array();
    for (const auto& f : forbidden_source_) forbidden.push_back(f);
    return {{"layers", layers}, {"forbidden", forbidden}, {"api_backbone", api_backbone_}};
}

std::size_t SearchSpace::size() const {
    std::size_t n = 1;
    for (const auto& l : layers_) n *= l.options.size();
    return n;
}

bool SearchSpace::valid(const Genome& g) const {
    if (g.choice.size() != layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (g.choice[i] >= layers_[i].options.size()) return false;
    // Decoding cannot be steered through a hosted model's API.
    if (api_backbone_ && constrained_option_ >= 0 &&
        g.choice[static_cast<std::size_t>(decoding_layer_)] == static_cast<std::size_t>(constrained_option_))
        return false;
    for (const auto& rule : forbidden_) {
        const bool hit = std::all_of(rule.begin(), rule.end(), [&](const auto& p) { return g.choice[p.first] == p.second; });
        if (hit) return false;
    }
    return true;
}

std::string SearchSpace::key(const Genome& g) const {
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < layers_.size(); ++i) parts.push_back(option(g, i));
    return util::join(parts, "|");
}

Genome SearchSpace::parse_key(const std::string& key) const {
    const auto parts = util::split(key, '|');
    if (parts.size() != layers_.size())
        throw FormatError("genome key '" + key + "' has " + std::to_string(parts.size()) + " parts, expected " +
                          std::to_string(layers_.size()));
    Genome g;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto oi = index_of(layers_[i].options, util::trim(parts[i]));
        if (oi < 0) throw FormatError("genome key '" + key + "': unknown option '" + parts[i] + "'");
        g.choice.push_back(static_cast<std::size_t>(oi));
    }
    return g;
}

std::vector<Genome> enumerate_space(const SearchSpace& space) {
    std::vector<Genome> out;
    Genome g{std::vector<std::size_t>(space.layers().size(), 0)};
    for (;;) {
        if (space.valid(g)) out.push_back(g);
        // Odometer increment, last layer fastest.
        std::size_t i = g.choice.size();
        while (i > 0) {
            --i;
            if (++g.choice[i] < space.layers()[i].options.size()) break;
            g.choice[i] = 0;
            if (i == 0) return out;
        }
    }
}

// --- operators ---------------------------------------------------------------

void GaParams::validate() const {
    if (population_size < 2) throw FormatError("population size must be at least 2");
    if (generations < 1) throw FormatError("generations must be at least 1");
    if (!(swap_probability >= 0 && swap_probability <= 1)) throw FormatError("swap probability must be in [0,1]");
    if (!(mutation_probability >= 0 && mutation_probability <= 1))
        throw FormatError("mutation probability must be in [0,1]");
    if (elitism_count < 0 || elitism_count >= population_size)
        throw FormatError("elitism count must be in [0, population size)");
}

json GaParams::to_json() const {
    return {{"population_size", population_size}, {"generations", generations},
            {"swap_probability", swap_probability}, {"mutation_probability", mutation_probability},
            {"elitism_count", elitism_count},       {"seed", seed}};
}

Population init_population(const SearchSpace& space, int size, Rng& rng) {
    constexpr int kMaxAttempts = 100000;
    Population out;
    int failures = 0;
    while (static_cast<int>(out.size()) < size) {
        Genome g;
        for (const auto& layer : space.layers()) g.choice.push_back(uniform_index(layer.options.size(), rng));
        if (space.valid(g)) {
            out.push_back(std::move(g));
            failures = 0;
        } else if (++failures >= kMaxAttempts) {
            throw NoValidGenome("no valid genome found after " + std::to_string(kMaxAttempts) + " draws");
        }
    }
    return out;
}

std::pair<std::size_t, std::size_t> select_pair(const std::vector<double>& fitness, Rng& rng) {
    if (fitness.size() < 2) throw Error("selection needs at least two individuals");
    for (double f : fitness)
        if (!(f >= 0) || !std::isfinite(f)) throw Error("fitness values must be finite and non-negative");

    std::vector<std::size_t> pool(fitness.size());
    std::iota(pool.begin(), pool.end(), 0);
    const auto lowest = std::min_element(fitness.begin(), fitness.end());
    if (std::count(fitness.begin(), fitness.end(), *lowest) == 1 && fitness.size() >= 3)
        pool.erase(pool.begin() + (lowest - fitness.begin()));

    auto draw = [&]() {
        double total = 0;
        for (auto i : pool) total += fitness[i];
        std::size_t pos = 0;
        if (total <= 0) {
            pos = uniform_index(pool.size(), rng);
        } else {
            const double u = uniform01(rng) * total;
            double acc = 0;
            pos = pool.size();
            for (std::size_t k = 0; k < pool.size(); ++k) {
                acc += fitness[pool[k]];
                if (u < acc) {
                    pos = k;
                    break;
                }
            }
            // Rounding at the top end: take the last member with weight.
            if (pos == pool.size())
                for (std::size_t k = pool.size(); k-- > 0;)
                    if (fitness[pool[k]] > 0) {
                        pos = k;
                        break;
                    }
        }
        const std::size_t picked = pool[pos];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pos));
        return picked;
    };
    const std::size_t first = draw();
    const std::size_t second = draw();
    return {first, second};
}

std::pair<Genome, Genome> swap_modules(const Genome& a, const Genome& b, double p_s, const SearchSpace& space,
                                       Rng& rng) {
    Genome x = a, y = b;
    for (std::size_t i = 0; i < x.choice.size(); ++i) {
        if (uniform01(rng) >= p_s) continue;
        std::swap(x.choice[i], y.choice[i]);
        if (!space.valid(x) || !space.valid(y)) std::swap(x.choice[i], y.choice[i]);
    }
    return {x, y};
}

Genome mutate(const Genome& g, double p_m, const SearchSpace& space, Rng& rng) {
    Genome out = g;
    for (std::size_t i = 0; i < out.choice.size(); ++i) {
        const std::size_t n = space.layers()[i].options.size();
        if (uniform01(rng) >= p_m || n < 2) continue;
        const std::size_t old = out.choice[i];
        std::size_t pick = uniform_index(n - 1, rng);
        if (pick >= old) ++pick;
        out.choice[i] = pick;
        if (!space.valid(out)) out.choice[i] = old;
    }
    return out;
}

// --- search ------------------------------------------------------------------

json SearchResult::to_json(const SearchSpace& space) const {
    json gens = json::array();
    for (std::size_t t = 0; t < generations.size(); ++t) {
        json pop = json::array();
        for (const auto& g : generations[t].population) pop.push_back(space.key(g));
        gens.push_back({{"generation", t}, {"population", pop}, {"fitness", generations[t].fitness}});
    }
    return {{"best", space.key(best)},
            {"best_fitness", best_fitness},
            {"evaluations", evaluations},
            {"best_trace", best_trace},
            {"generations", gens}};
}

SearchResult evolve(const SearchSpace& space, const GaParams& params, const FitnessFn& fitness) {
    params.validate();
    Rng rng(params.seed);
    std::map<Genome, double> memo;
    std::vector<Genome> evaluation_order;

    auto score = [&](const Genome& g) {
        if (const auto it = memo.find(g); it != memo.end()) return it->second;
        double v = 0;
        try {
            v = fitness(g);
        } catch (const FitnessError&) {
            throw;
        } catch (const std::exception& e) {
            throw FitnessError(space.key(g), e.what());
        }
        if (!(v >= 0) || !std::isfinite(v))
            throw FitnessError(space.key(g), "fitness must be finite and non-negative, got " + util::format_double(v));
        memo.emplace(g, v);
        evaluation_order.push_back(g);
        return v;
    };

    SearchResult result;
    auto record = [&](Population pop) {
        Generation gen{std::move(pop), {}};
        for (const auto& g : gen.population) gen.fitness.push_back(score(g));
        result.best_trace.push_back(*std::max_element(gen.fitness.begin(), gen.fitness.end()));
        result.generations.push_back(std::move(gen));
    };

    record(init_population(space, params.population_size, rng));
    const auto n = static_cast<std::size_t>(params.population_size);
    for (int t = 1; t <= params.generations; ++t) {
        const Generation& cur = result.generations.back();
        std::vector<std::size_t> ranked(n);
        std::iota(ranked.begin(), ranked.end(), 0);
        std::stable_sort(ranked.begin(), ranked.end(),
                         [&](std::size_t a, std::size_t b) { return cur.fitness[a] > cur.fitness[b]; });

        Population next;
        for (int e = 0; e < params.elitism_count; ++e) next.push_back(cur.population[ranked[static_cast<std::size_t>(e)]]);
        while (next.size() < n) {
            const auto [i, j] = select_pair(cur.fitness, rng);
            auto [c1, c2] = swap_modules(cur.population[i], cur.population[j], params.swap_probability, space, rng);
            next.push_back(mutate(c1, params.mutation_probability, space, rng));
            Genome second = mutate(c2, params.mutation_probability, space, rng);
            if (next.size() < n) next.push_back(std::move(second));
        }
        record(std::move(next));
    }

    result.evaluations = evaluation_order.size();
    result.best = evaluation_order.front();
    result.best_fitness = memo.at(result.best);
    for (const auto& g : evaluation_order) {
        const double v = memo.at(g);
        if (v > result.best_fitness) {
            result.best = g;
            result.best_fitness = v;
        }
    }
    return result;
}

// --- fitness sources ---------------------------------------------------------

FitnessTable::FitnessTable(const SearchSpace& space, std::map<Genome, double> scores)
    : space_(space), scores_(std::move(scores)) {}

FitnessTable FitnessTable::load(const SearchSpace& space, const fs::path& path) {
    const auto rows = util::parse_csv(util::read_text_file(path));
    std::map<Genome, double> scores;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 2) throw FormatError(path.string() + ": row " + std::to_string(r + 1) + " needs 2 fields");
        double v = 0;
        try {
            std::size_t used = 0;
            v = std::stod(row[1], &used);
            if (util::trim(row[1].substr(used)) != "") throw std::invalid_argument("trailing text");
        } catch (const std::exception&) {
            if (r == 0) continue;  // header
            throw FormatError(path.string() + ": row " + std::to_string(r + 1) + ": bad score '" + row[1] + "'");
        }
        Genome g = space.parse_key(row[0]);
        if (!scores.emplace(std::move(g), v).second)
            throw FormatError(path.string() + ": genome '" + row[0] + "' listed twice");
    }
    return FitnessTable(space, std::move(scores));
}

double FitnessTable::operator()(const Genome& g) const {
    const auto it = scores_.find(g);
    if (it == scores_.end()) throw FitnessError(space_.key(g), "not in the fitness table");
    return it->second;
}

TargetMetric target_metric_from_string(const std::string& s) {
    const std::string v = util::to_lower(s);
    if (v == "ex") return TargetMetric::Ex;
    if (v == "em") return TargetMetric::Em;
    if (v == "ves") return TargetMetric::Ves;
    throw FormatError("unknown target metric '" + s + "'");
}

std::string file_stem(const std::string& key) {
    std::string out = key;
    for (char& c : out)
        if (c == '|') c = '+';
        else if (c == '/' || c == '\\') c = '_';
    return out;
}

FitnessFn testbed_fitness(const SearchSpace& space, const Benchmark& benchmark, const Subset& subset,
                          const ExecutionConfig& config, const fs::path& prediction_dir, const fs::path& log_dir,
                          TargetMetric metric) {
    auto bench = std::make_shared<const Benchmark>(benchmark);
    return [space, bench, subset, config, prediction_dir, log_dir, metric](const Genome& g) {
        const std::string stem = file_stem(space.key(g));
        fs::path preds = prediction_dir / (stem + ".json");
        if (!fs::exists(preds)) preds = prediction_dir / (stem + ".txt");
        if (!fs::exists(preds))
            throw FitnessError(space.key(g), "no prediction file " + stem + ".json or .txt in " + prediction_dir.string());
        PredictionFileAdapter adapter(preds, *bench, {stem, "", std::nullopt});
        fs::create_directories(log_dir);
        const RunLog log = run_system(adapter, *bench, subset, config, {log_dir / (stem + ".jsonl"), std::nullopt});
        switch (metric) {
            case TargetMetric::Ex: return metrics::compute_ex(log.outcomes);
            case TargetMetric::Em: return metrics::compute_em(log.outcomes);
            case TargetMetric::Ves: return metrics::compute_ves(log.outcomes);
        }
        return 0.0;
    };
}

}  // namespace nl2sql360::aas
