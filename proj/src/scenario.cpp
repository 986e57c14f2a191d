#include "nl2sql360/scenario.hpp"

#include <set>

#include "nl2sql360/error.hpp"
#include "nl2sql360/sql/parser.hpp"
#include "nl2sql360/util/strings.hpp"

namespace nl2sql360 {

using nlohmann::json;

std::string to_string(Cmp c) {
    switch (c) {
        case Cmp::Eq: return "=";
        case Cmp::Ne: return "!=";
        case Cmp::Lt: return "<";
        case Cmp::Le: return "<=";
        case Cmp::Gt: return ">";
        case Cmp::Ge: return ">=";
    }
    return "=";
}

Cmp cmp_from_string(const std::string& s) {
    if (s == "=" || s == "==") return Cmp::Eq;
    if (s == "!=" || s == "<>" || s == "≠") return Cmp::Ne;
    if (s == "<") return Cmp::Lt;
    if (s == "<=" || s == "≤") return Cmp::Le;
    if (s == ">") return Cmp::Gt;
    if (s == ">=" || s == "≥") return Cmp::Ge;
    throw FormatError("unknown comparator '" + s + "'");
}

bool apply(Cmp c, int lhs, int rhs) noexcept {
    switch (c) {
        case Cmp::Eq: return lhs == rhs;
        case Cmp::Ne: return lhs != rhs;
        case Cmp::Lt: return lhs < rhs;
        case Cmp::Le: return lhs <= rhs;
        case Cmp::Gt: return lhs > rhs;
        case Cmp::Ge: return lhs >= rhs;
    }
    return false;
}

namespace {

const std::map<std::string, AtomField>& field_names() {
    static const std::map<std::string, AtomField> names = {
        {"hardness", AtomField::Hardness},
        {"subquery_count", AtomField::SubqueryCount},
        {"join_count", AtomField::JoinCount},
        {"logical_connector_count", AtomField::ConnectorCount},
        {"has_order_by", AtomField::HasOrderBy},
        {"keyword", AtomField::Keyword},
        {"domain", AtomField::Domain},
        {"qvt_eligible", AtomField::QvtEligible},
    };
    return names;
}

std::string field_name(AtomField f) {
    for (const auto& [name, field] : field_names())
        if (field == f) return name;
    return {};
}

bool is_count(AtomField f) {
    return f == AtomField::SubqueryCount || f == AtomField::JoinCount || f == AtomField::ConnectorCount;
}

ScenarioSpec atom(AtomField f) {
    ScenarioSpec s;
    s.kind = ScenarioSpec::Kind::Atom;
    s.field = f;
    return s;
}

}  // namespace

ScenarioSpec ScenarioSpec::all() { return all_of({}); }

ScenarioSpec ScenarioSpec::hardness(sql::Hardness tier, Cmp cmp) {
    ScenarioSpec s = atom(AtomField::Hardness);
    s.cmp = cmp;
    s.number = static_cast<int>(tier);
    return s;
}

ScenarioSpec ScenarioSpec::count(AtomField field, Cmp cmp, int k) {
    if (!is_count(field)) throw FormatError("atom '" + field_name(field) + "' is not a count");
    ScenarioSpec s = atom(field);
    s.cmp = cmp;
    s.number = k;
    return s;
}

ScenarioSpec ScenarioSpec::has_order_by(bool value) {
    ScenarioSpec s = atom(AtomField::HasOrderBy);
    s.flag = value;
    return s;
}

ScenarioSpec ScenarioSpec::keyword(const std::string& tag) {
    ScenarioSpec s = atom(AtomField::Keyword);
    s.text = util::to_upper(util::trim(tag));
    return s;
}

ScenarioSpec ScenarioSpec::domain(const std::string& name) {
    ScenarioSpec s = atom(AtomField::Domain);
    s.text = name;
    return s;
}

ScenarioSpec ScenarioSpec::qvt_eligible(bool value) {
    ScenarioSpec s = atom(AtomField::QvtEligible);
    s.flag = value;
    return s;
}

ScenarioSpec ScenarioSpec::all_of(std::vector<ScenarioSpec> parts) {
    ScenarioSpec s;
    s.kind = Kind::And;
    s.children = std::move(parts);
    return s;
}

ScenarioSpec ScenarioSpec::any_of(std::vector<ScenarioSpec> parts) {
    ScenarioSpec s;
    s.kind = Kind::Or;
    s.children = std::move(parts);
    return s;
}

ScenarioSpec ScenarioSpec::negate(ScenarioSpec part) {
    ScenarioSpec s;
    s.kind = Kind::Not;
    s.children.push_back(std::move(part));
    return s;
}

ScenarioSpec ScenarioSpec::from_json(const json& j) {
    if (!j.is_object() || j.size() == 0) throw FormatError("scenario spec node must be a non-empty object");
    if (j.contains("and") || j.contains("or")) {
        const bool is_and = j.contains("and");
        const json& parts = j.at(is_and ? "and" : "or");
        if (!parts.is_array() || j.size() != 1) throw FormatError("'and'/'or' takes a single array of specs");
        std::vector<ScenarioSpec> children;
        for (const auto& p : parts) children.push_back(from_json(p));
        return is_and ? all_of(std::move(children)) : any_of(std::move(children));
    }
    if (j.contains("not")) {
        if (j.size() != 1) throw FormatError("'not' node takes exactly one spec");
        return negate(from_json(j.at("not")));
    }
    if (!j.contains("atom") || !j.at("atom").is_string()) throw FormatError("spec node needs 'and', 'or', 'not' or 'atom'");
    const std::string name = j.at("atom").get<std::string>();
    auto it = field_names().find(name);
    if (it == field_names().end()) throw FormatError("unknown atom '" + name + "'");
    if (!j.contains("value")) throw FormatError("atom '" + name + "' needs a value");
    const json& v = j.at("value");
    const Cmp cmp = j.contains("cmp") ? cmp_from_string(j.at("cmp").get<std::string>()) : Cmp::Eq;
    const AtomField f = it->second;
    switch (f) {
        case AtomField::Hardness:
            if (!v.is_string()) throw FormatError("hardness atom needs a tier name");
            return hardness(sql::hardness_from_string(v.get<std::string>()), cmp);
        case AtomField::SubqueryCount:
        case AtomField::JoinCount:
        case AtomField::ConnectorCount:
            if (!v.is_number_integer()) throw FormatError("atom '" + name + "' needs an integer value");
            return count(f, cmp, v.get<int>());
        case AtomField::HasOrderBy:
        case AtomField::QvtEligible: {
            if (!v.is_boolean()) throw FormatError("atom '" + name + "' needs a boolean value");
            if (j.contains("cmp")) throw FormatError("atom '" + name + "' takes no comparator");
            ScenarioSpec s = atom(f);
            s.flag = v.get<bool>();
            return s;
        }
        case AtomField::Keyword:
        case AtomField::Domain:
            if (!v.is_string()) throw FormatError("atom '" + name + "' needs a string value");
            if (j.contains("cmp")) throw FormatError("atom '" + name + "' takes no comparator");
            return f == AtomField::Keyword ? keyword(v.get<std::string>()) : domain(v.get<std::string>());
    }
    throw FormatError("unhandled atom '" + name + "'");
}

json ScenarioSpec::to_json() const {
    switch (kind) {
        case Kind::And:
        case Kind::Or: {
            json parts = json::array();
            for (const auto& c : children) parts.push_back(c.to_json());
            return {{kind == Kind::And ? "and" : "or", parts}};
        }
        case Kind::Not:
            return {{"not", children.at(0).to_json()}};
        case Kind::Atom:
            break;
    }
    json j = {{"atom", field_name(field)}};
    switch (field) {
        case AtomField::Hardness:
            j["value"] = util::to_lower(sql::to_string(static_cast<sql::Hardness>(number)));
            if (cmp != Cmp::Eq) j["cmp"] = nl2sql360::to_string(cmp);
            break;
        case AtomField::SubqueryCount:
        case AtomField::JoinCount:
        case AtomField::ConnectorCount:
            j["cmp"] = nl2sql360::to_string(cmp);
            j["value"] = number;
            break;
        case AtomField::HasOrderBy:
        case AtomField::QvtEligible:
            j["value"] = flag;
            break;
        case AtomField::Keyword:
        case AtomField::Domain:
            j["value"] = text;
            break;
    }
    return j;
}

std::string ScenarioSpec::hash() const { return util::hex64(util::fnv1a64(to_json().dump())); }

bool ScenarioSpec::uses(AtomField f) const {
    if (kind == Kind::Atom) return field == f;
    for (const auto& c : children)
        if (c.uses(f)) return true;
    return false;
}

bool evaluate(const ScenarioSpec& spec, const SampleFacts& facts) {
    using Kind = ScenarioSpec::Kind;
    switch (spec.kind) {
        case Kind::And:
            for (const auto& c : spec.children)
                if (!evaluate(c, facts)) return false;
            return true;
        case Kind::Or:
            for (const auto& c : spec.children)
                if (evaluate(c, facts)) return true;
            return false;
        case Kind::Not:
            return !evaluate(spec.children.at(0), facts);
        case Kind::Atom:
            break;
    }
    const sql::SqlProfile& p = *facts.profile;
    switch (spec.field) {
        case AtomField::Hardness: return apply(spec.cmp, static_cast<int>(facts.hardness), spec.number);
        case AtomField::SubqueryCount: return apply(spec.cmp, p.subquery_count, spec.number);
        case AtomField::JoinCount: return apply(spec.cmp, p.join_count, spec.number);
        case AtomField::ConnectorCount: return apply(spec.cmp, p.logical_connector_count, spec.number);
        case AtomField::HasOrderBy: return p.has_order_by == spec.flag;
        case AtomField::Keyword: return p.has_keyword(spec.text);
        case AtomField::Domain: return facts.domain && *facts.domain == spec.text;
        case AtomField::QvtEligible: return facts.qvt_eligible == spec.flag;
    }
    return false;
}

ProfileMap profile_benchmark(const Benchmark& benchmark, const sql::ProfileOptions& options) {
    ProfileMap out;
    for (const auto& s : benchmark.samples) out.emplace(s.sample_id, sql::profile(sql::parse_sql(s.gold_sql), options));
    return out;
}

namespace {

Subset filter_samples(const Benchmark& benchmark, const std::vector<const Sample*>& candidates,
                      const ScenarioSpec& spec, const ProfileMap& profiles, const std::string& name,
                      const sql::HardnessRules& rules) {
    const bool need_domain = spec.uses(AtomField::Domain);
    if (need_domain && !benchmark.domain_map)
        throw UnknownDomain("scenario uses a domain condition but benchmark " + benchmark.name + " has no domain map");

    std::set<std::string> eligible;
    if (spec.uses(AtomField::QvtEligible)) {
        for (const auto& g : group_variants(benchmark))
            if (g.qvt_eligible())
                for (const auto& v : g.variants) eligible.insert(v.sample_id);
    }

    Subset out;
    out.parent = benchmark.name;
    out.name = name;
    out.spec = spec;
    for (const Sample* s : candidates) {
        auto it = profiles.find(s->sample_id);
        if (it == profiles.end()) throw Error("no profile for sample " + s->sample_id);
        SampleFacts facts;
        facts.profile = &it->second;
        facts.hardness = sql::classify_hardness(it->second, rules);
        if (need_domain) {
            facts.domain = benchmark.domain_of(s->db_id);
            if (!facts.domain)
                throw UnknownDomain("domain map has no entry for database '" + s->db_id + "'");
        }
        facts.qvt_eligible = eligible.count(s->sample_id) > 0;
        if (evaluate(spec, facts)) out.sample_ids.push_back(s->sample_id);
    }
    return out;
}

}  // namespace

Subset filter(const Benchmark& benchmark, const ScenarioSpec& spec, const ProfileMap& profiles,
              const std::string& name, const sql::HardnessRules& rules) {
    std::vector<const Sample*> all;
    for (const auto& s : benchmark.samples) all.push_back(&s);
    return filter_samples(benchmark, all, spec, profiles, name, rules);
}

Subset filter(const Benchmark& benchmark, const Subset& within, const ScenarioSpec& spec, const ProfileMap& profiles,
              const std::string& name, const sql::HardnessRules& rules) {
    const std::set<std::string> keep(within.sample_ids.begin(), within.sample_ids.end());
    std::vector<const Sample*> candidates;
    for (const auto& s : benchmark.samples)
        if (keep.count(s.sample_id)) candidates.push_back(&s);
    return filter_samples(benchmark, candidates, spec, profiles, name, rules);
}

const std::map<std::string, ScenarioSpec>& builtin_scenarios() {
    static const std::map<std::string, ScenarioSpec> specs = [] {
        using S = ScenarioSpec;
        std::map<std::string, ScenarioSpec> m;
        m["has_subquery"] = S::count(AtomField::SubqueryCount, Cmp::Ge, 1);
        m["no_subquery"] = S::count(AtomField::SubqueryCount, Cmp::Eq, 0);
        m["has_connector"] = S::count(AtomField::ConnectorCount, Cmp::Ge, 1);
        m["no_connector"] = S::count(AtomField::ConnectorCount, Cmp::Eq, 0);
        m["has_orderby"] = S::has_order_by(true);
        m["no_orderby"] = S::has_order_by(false);
        m["has_join"] = S::count(AtomField::JoinCount, Cmp::Ge, 1);
        m["no_join"] = S::count(AtomField::JoinCount, Cmp::Eq, 0);
        m["easy"] = S::hardness(sql::Hardness::Easy);
        m["medium"] = S::hardness(sql::Hardness::Medium);
        m["hard"] = S::hardness(sql::Hardness::Hard);
        m["extra"] = S::hardness(sql::Hardness::Extra);
        return m;
    }();
    return specs;
}

const std::vector<std::string>& builtin_scenario_names() {
    static const std::vector<std::string> names = {
        "has_subquery", "no_subquery", "has_connector", "no_connector", "has_orderby", "no_orderby",
        "has_join",     "no_join",     "easy",          "medium",       "hard",       "extra",
    };
    return names;
}

}  // namespace nl2sql360
