#pragma once

// Experiment configuration: "key = value" lines, '#' comments, lists
// comma-separated, rationals as "num/den" (decimals accepted), angles with a
// "deg" or "rad" suffix. Only the [config] section is read, so a report can
// be fed back as a config.

#include <algorithm>
#include <array>
#include <charconv>
#include <limits>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "corrlab/dist.hpp"
#include "corrlab/ghz.hpp"
#include "corrlab/ghz_net.hpp"
#include "corrlab/rational.hpp"

namespace corrlab::cli {

/// Every problem found in a config, not just the first.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors)
        : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

    const std::vector<std::string>& errors() const { return errors_; }

private:
    static std::string join(const std::vector<std::string>& errors) {
        std::string s;
        for (const auto& e : errors) {
            s += (s.empty() ? "" : "\n") + e;
        }
        return s;
    }
    std::vector<std::string> errors_;
};

enum class Mode { Check, Bell, Chsh, Aspect, Source, Ghz, GhzNetCoordinator, GhzNetNode };

inline constexpr std::array<std::pair<Mode, const char*>, 8> kModeNames{{{Mode::Check, "check"},
                                                                         {Mode::Bell, "bell"},
                                                                         {Mode::Chsh, "chsh"},
                                                                         {Mode::Aspect, "aspect"},
                                                                         {Mode::Source, "source"},
                                                                         {Mode::Ghz, "ghz"},
                                                                         {Mode::GhzNetCoordinator, "ghz-net-coordinator"},
                                                                         {Mode::GhzNetNode, "ghz-net-node"}}};

inline const char* to_string(Mode m) {
    for (const auto& [mode, name] : kModeNames) {
        if (mode == m) {
            return name;
        }
    }
    return "?";
}

inline bool is_stochastic(Mode m) {
    return m == Mode::Aspect || m == Mode::Source || m == Mode::Ghz || m == Mode::GhzNetCoordinator;
}

struct PairSpec {
    std::size_t i = 0;
    std::size_t j = 1;
    std::array<Rational, 4> table;

    friend bool operator==(const PairSpec&, const PairSpec&) = default;
};

struct ExperimentConfig {
    Mode mode = Mode::Check;

    // covariance input: exactly one of sigmas / angles / pairs
    std::vector<Rational> sigmas;       // resolved values (also filled from angles)
    std::vector<std::string> angles;    // original tokens when given as angles
    std::vector<PairSpec> pairs;
    std::optional<std::size_t> arity;
    std::string precision = "1e-9";

    std::uint64_t trials = 0;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    std::string matrix = "qm"; // aspect: qm | uniform | gamma-max

    std::uint64_t models = 100;
    std::uint64_t support = 8;
    std::uint64_t reorder_trials = 10000;

    ghz::Schedule schedule = ghz::Schedule::standard();
    std::array<unsigned, 3> rademacher{1, 2, 3};
    std::uint64_t probes = 1000;
    std::string trials_out;

    int role = 0; // node id for ghz-net-node
    ghz::net::Endpoint listen{"127.0.0.1", 0};
    std::array<ghz::net::Endpoint, 3> nodes;
    std::string transcript;
    int timeout_ms = 5000;

    double precision_value() const { return std::stod(precision); }
    ghz::NodeAssignment assignment() const {
        return ghz::NodeAssignment::table5(rademacher[0], rademacher[1], rademacher[2]);
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in{std::string(s)};
    while (std::getline(in, item, ',')) {
        out.push_back(trim(item));
    }
    if (!s.empty() && s.back() == ',') {
        out.emplace_back();
    }
    return out;
}

inline std::uint64_t parse_count(const std::string& v, const std::string& key, bool allow_zero = false) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    // accept 1e6-style counts as well as plain integers
    if (v.find_first_of("eE") != std::string::npos) {
        const Rational r = Rational::parse(v);
        if (!r.is_integer() || r.sign() < 0 || r > Rational(std::numeric_limits<long>::max())) {
            throw DomainError(key + " must be a non-negative integer, got '" + v + "'");
        }
        out = r.numerator().get_ui();
    } else {
        const auto [p, ec] = std::from_chars(v.data(), end, out);
        if (ec != std::errc() || p != end || v.empty()) {
            throw DomainError(key + " must be a non-negative integer, got '" + v + "'");
        }
    }
    if (out == 0 && !allow_zero) {
        throw DomainError(key + " must be at least 1");
    }
    return out;
}

inline double parse_angle(const std::string& token) {
    auto number = [&](std::string_view body) {
        double v = 0;
        const auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
        if (ec != std::errc() || p != body.data() + body.size() || body.empty()) {
            throw DomainError("malformed angle '" + token + "'");
        }
        return v;
    };
    if (token.size() > 3 && token.ends_with("deg")) {
        return degrees(number(std::string_view(token).substr(0, token.size() - 3)));
    }
    if (token.size() > 3 && token.ends_with("rad")) {
        return number(std::string_view(token).substr(0, token.size() - 3));
    }
    throw DomainError("angle '" + token + "' needs a deg or rad suffix");
}

inline int parse_role(const std::string& v) {
    if (v == "node1" || v == "1") {
        return 1;
    }
    if (v == "node2" || v == "2") {
        return 2;
    }
    if (v == "node3" || v == "3") {
        return 3;
    }
    throw DomainError("role must be node1, node2 or node3 (the coordinator uses mode ghz-net-coordinator), got '" + v +
                      "'");
}

inline PairSpec parse_pair(const std::string& v) {
    const auto colon = v.find(':');
    if (colon == std::string::npos) {
        throw DomainError("pair must be '<i> <j> : p++, p+-, p-+, p--', got '" + v + "'");
    }
    std::istringstream vars(v.substr(0, colon));
    long i = -1, j = -1;
    std::string extra;
    if (!(vars >> i >> j) || (vars >> extra) || i < 0 || j < 0) {
        throw DomainError("pair variables must be two non-negative indices in '" + v + "'");
    }
    if (i == j) {
        throw DomainError("pair needs two distinct variables in '" + v + "'");
    }
    const auto cells = split_list(v.substr(colon + 1));
    if (cells.size() != 4) {
        throw DomainError("pair needs four probabilities in '" + v + "'");
    }
    PairSpec p{static_cast<std::size_t>(i), static_cast<std::size_t>(j), {}};
    for (std::size_t k = 0; k < 4; ++k) {
        p.table[k] = Rational::parse(cells[k]);
    }
    PairMarginal(p.i, p.j, p.table); // validates
    return p;
}

// Keys each mode accepts; "mode" and "version" are always accepted.
inline const std::set<std::string>& keys_for(Mode m) {
    static const std::map<Mode, std::set<std::string>> table{
        {Mode::Check, {"sigmas", "angles", "pair", "arity", "precision"}},
        {Mode::Bell, {"sigmas", "angles", "precision"}},
        {Mode::Chsh, {"sigmas", "angles", "precision"}},
        {Mode::Aspect, {"sigmas", "angles", "matrix", "precision", "trials", "seed", "workers"}},
        {Mode::Source, {"models", "support", "trials", "reorder_trials", "seed", "workers"}},
        {Mode::Ghz, {"schedule", "trials", "seed", "rademacher", "probes", "trials_out"}},
        {Mode::GhzNetCoordinator,
         {"schedule", "trials", "seed", "rademacher", "nodes", "transcript", "trials_out", "timeout_ms"}},
        {Mode::GhzNetNode, {"role", "listen", "rademacher", "transcript"}},
    };
    return table.at(m);
}

inline const std::set<std::string>& all_keys() {
    static const std::set<std::string> keys = [] {
        std::set<std::string> k{"mode", "version"};
        for (const auto& [mode, name] : kModeNames) {
            const auto& mk = keys_for(mode);
            k.insert(mk.begin(), mk.end());
        }
        return k;
    }();
    return keys;
}

inline std::uint64_t default_trials(Mode m) {
    switch (m) {
    case Mode::Aspect: return 1000000;
    case Mode::Source: return 100000;
    case Mode::Ghz: return 100000;
    case Mode::GhzNetCoordinator: return 100;
    default: return 0;
    }
}

} // namespace detail

struct ConfigLine {
    std::size_t line = 0;
    std::string key;
    std::string value;
};

/// Splits the text into key/value lines of the [config] section. Malformed
/// lines are reported through `errors`.
inline std::vector<ConfigLine> scan_config(std::string_view text, std::vector<std::string>& errors) {
    std::vector<ConfigLine> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t lineno = 0;
    bool in_config = true;
    bool saw_section = false;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.push_back("line " + std::to_string(lineno) + ": malformed section header");
                continue;
            }
            const std::string name = line.substr(1, line.size() - 2);
            if (!saw_section && name != "config" && !out.empty()) {
                errors.push_back("line " + std::to_string(lineno) + ": keys before the first section");
            }
            saw_section = true;
            in_config = name == "config";
            continue;
        }
        if (!in_config) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
            continue;
        }
        out.push_back({lineno, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1))});
    }
    return out;
}

/// Parses and validates a config for its mode; throws ConfigError listing
/// every problem found. `overrides` replace (or add) keys of the text.
inline ExperimentConfig parse_config(std::string_view text,
                                     const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    std::vector<std::string> errors;
    auto lines = scan_config(text, errors);
    for (const auto& [key, value] : overrides) {
        std::erase_if(lines, [&](const ConfigLine& l) { return l.key == key; });
        lines.push_back({0, key, value});
    }
    auto where = [](const ConfigLine& l) {
        return l.line == 0 ? std::string("override: ") : "line " + std::to_string(l.line) + ": ";
    };

    ExperimentConfig cfg;
    std::optional<Mode> mode;
    std::map<std::string, const ConfigLine*> seen;
    for (const auto& l : lines) {
        if (!detail::all_keys().contains(l.key)) {
            errors.push_back(where(l) + "unknown key '" + l.key + "'");
            continue;
        }
        if (l.key != "pair") {
            if (seen.contains(l.key)) {
                errors.push_back(where(l) + "duplicate key '" + l.key + "'");
                continue;
            }
            seen[l.key] = &l;
        }
        if (l.key == "mode") {
            for (const auto& [m, name] : kModeNames) {
                if (l.value == name) {
                    mode = m;
                }
            }
            if (!mode) {
                errors.push_back(where(l) + "unknown mode '" + l.value + "'");
            }
        }
    }
    if (!mode) {
        if (!seen.contains("mode")) {
            errors.emplace_back("missing key 'mode'");
        }
        throw ConfigError(errors);
    }
    cfg.mode = *mode;
    cfg.trials = detail::default_trials(cfg.mode);
    const auto& allowed = detail::keys_for(cfg.mode);

    bool angles_valid = false;
    std::size_t sigma_count = 0;
    auto guarded = [&](const ConfigLine& l, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            errors.push_back(where(l) + l.key + ": " + e.what());
        }
    };

    for (const auto& l : lines) {
        if (!detail::all_keys().contains(l.key) || l.key == "mode" || l.key == "version") {
            continue;
        }
        if (!allowed.contains(l.key)) {
            errors.push_back(where(l) + "key '" + l.key + "' is not used by mode " + to_string(cfg.mode));
            continue;
        }
        const std::string& v = l.value;
        if (l.key == "sigmas") {
            const auto items = detail::split_list(v);
            sigma_count = items.size();
            for (std::size_t k = 0; k < items.size(); ++k) {
                guarded(l, [&] {
                    Rational s;
                    try {
                        s = Rational::parse(items[k]);
                    } catch (const DomainError&) {
                        throw DomainError("sigma " + std::to_string(k + 1) + " is not a rational: '" + items[k] + "'");
                    }
                    if (s.abs() > Rational(1)) {
                        throw DomainError("sigma " + std::to_string(k + 1) + " = " + s.str() + " is outside [-1, 1]");
                    }
                    cfg.sigmas.push_back(s);
                });
            }
        } else if (l.key == "angles") {
            guarded(l, [&] {
                cfg.angles = detail::split_list(v);
                for (const auto& a : cfg.angles) {
                    detail::parse_angle(a);
                }
                angles_valid = true;
            });
        } else if (l.key == "pair") {
            guarded(l, [&] { cfg.pairs.push_back(detail::parse_pair(v)); });
        } else if (l.key == "arity") {
            guarded(l, [&] { cfg.arity = detail::parse_count(v, "arity"); });
        } else if (l.key == "precision") {
            guarded(l, [&] {
                double p = 0;
                const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), p);
                if (ec != std::errc() || ptr != v.data() + v.size() || !(p > 0) || p >= 1) {
                    throw DomainError("must be a number in (0, 1), got '" + v + "'");
                }
                cfg.precision = v;
            });
        } else if (l.key == "trials") {
            guarded(l, [&] { cfg.trials = detail::parse_count(v, "trials"); });
        } else if (l.key == "seed") {
            guarded(l, [&] { cfg.seed = detail::parse_count(v, "seed", true); });
        } else if (l.key == "workers") {
            guarded(l, [&] {
                const auto w = detail::parse_count(v, "workers");
                if (w > 256) {
                    throw DomainError("at most 256 workers");
                }
                cfg.workers = static_cast<unsigned>(w);
            });
        } else if (l.key == "matrix") {
            if (v != "qm" && v != "uniform" && v != "gamma-max") {
                errors.push_back(where(l) + "matrix must be qm, uniform or gamma-max");
            } else {
                cfg.matrix = v;
            }
        } else if (l.key == "models") {
            guarded(l, [&] { cfg.models = detail::parse_count(v, "models"); });
        } else if (l.key == "support") {
            guarded(l, [&] { cfg.support = detail::parse_count(v, "support"); });
        } else if (l.key == "reorder_trials") {
            guarded(l, [&] { cfg.reorder_trials = detail::parse_count(v, "reorder_trials", true); });
        } else if (l.key == "schedule") {
            guarded(l, [&] { cfg.schedule = v == "default" ? ghz::Schedule::standard() : ghz::Schedule::parse(v); });
        } else if (l.key == "rademacher") {
            guarded(l, [&] {
                const auto items = detail::split_list(v);
                if (items.size() != 3) {
                    throw DomainError("needs three indices");
                }
                for (std::size_t k = 0; k < 3; ++k) {
                    const auto idx = detail::parse_count(items[k], "rademacher index");
                    if (idx > 64) {
                        throw DomainError("indices above 64 are not supported");
                    }
                    cfg.rademacher[k] = static_cast<unsigned>(idx);
                }
                cfg.assignment(); // distinctness
            });
        } else if (l.key == "probes") {
            guarded(l, [&] { cfg.probes = detail::parse_count(v, "probes", true); });
        } else if (l.key == "trials_out") {
            cfg.trials_out = v;
        } else if (l.key == "role") {
            guarded(l, [&] { cfg.role = detail::parse_role(v); });
        } else if (l.key == "listen") {
            guarded(l, [&] { cfg.listen = ghz::net::Endpoint::parse(v); });
        } else if (l.key == "nodes") {
            guarded(l, [&] {
                const auto items = detail::split_list(v);
                if (items.size() != 3) {
                    throw DomainError("needs three host:port endpoints (node1, node2, node3)");
                }
                for (std::size_t k = 0; k < 3; ++k) {
                    cfg.nodes[k] = ghz::net::Endpoint::parse(items[k]);
                }
            });
        } else if (l.key == "transcript") {
            cfg.transcript = v;
        } else if (l.key == "timeout_ms") {
            guarded(l, [&] {
                const auto t = detail::parse_count(v, "timeout_ms");
                if (t > 3600000) {
                    throw DomainError("at most one hour");
                }
                cfg.timeout_ms = static_cast<int>(t);
            });
        }
    }

    // Cross-key checks.
    const bool has_sigmas = seen.contains("sigmas");
    const bool has_angles = seen.contains("angles");
    const bool has_pairs = !cfg.pairs.empty();
    if (has_sigmas && has_angles) {
        errors.emplace_back("both 'angles' and 'sigmas' given; use one");
    }
    if ((has_sigmas || has_angles) && has_pairs) {
        errors.emplace_back("'pair' cannot be combined with 'sigmas' or 'angles'");
    }
    if (seen.contains("arity") && !has_pairs) {
        errors.emplace_back("'arity' only applies to 'pair' systems");
    }
    if (has_angles && angles_valid) {
        const double tol = cfg.precision_value();
        for (const auto& a : cfg.angles) {
            cfg.sigmas.push_back(qm_covariance(detail::parse_angle(a), tol).value());
        }
    }
    const std::size_t n = has_angles ? cfg.angles.size() : sigma_count;
    const bool covariance_input = has_sigmas || has_angles;
    switch (cfg.mode) {
    case Mode::Check:
        if (!covariance_input && !has_pairs) {
            errors.emplace_back("mode check needs 'sigmas', 'angles' or 'pair'");
        } else if (covariance_input && n != 3 && n != 4) {
            errors.emplace_back("mode check takes 3 covariances (AB, AC, BC) or 4 (ab, ac, db, dc), got " +
                                std::to_string(n));
        }
        if (has_pairs) {
            std::size_t max_var = 0;
            for (const auto& p : cfg.pairs) {
                max_var = std::max({max_var, p.i, p.j});
            }
            if (cfg.arity && *cfg.arity <= max_var) {
                errors.push_back("arity " + std::to_string(*cfg.arity) + " is too small for variable " +
                                 std::to_string(max_var));
            }
            if (!cfg.arity) {
                cfg.arity = max_var + 1;
            }
        }
        break;
    case Mode::Bell:
        if (!covariance_input || n != 3) {
            errors.emplace_back("mode bell needs 3 covariances (AB, AC, BC) via 'sigmas' or 'angles'");
        }
        break;
    case Mode::Chsh:
        if (!covariance_input || n != 4) {
            errors.emplace_back("mode chsh needs 4 covariances (ab, ac, db, dc) via 'sigmas' or 'angles'");
        }
        break;
    case Mode::Aspect:
        if (seen.contains("matrix") && covariance_input) {
            errors.emplace_back("'matrix' cannot be combined with 'sigmas' or 'angles'");
        } else if (cfg.matrix == "qm" && (!covariance_input || n != 4)) {
            errors.emplace_back("mode aspect needs 4 covariances (ab, ac, db, dc) or 'matrix = uniform|gamma-max'");
        }
        if (covariance_input) {
            cfg.matrix = "qm";
        }
        break;
    case Mode::GhzNetCoordinator:
        if (!seen.contains("nodes")) {
            errors.emplace_back("mode ghz-net-coordinator needs 'nodes'");
        }
        break;
    case Mode::GhzNetNode:
        if (!seen.contains("role")) {
            errors.emplace_back("mode ghz-net-node needs 'role'");
        }
        break;
    default: break;
    }
    if (is_stochastic(cfg.mode) && !seen.contains("seed")) {
        errors.push_back(std::string("mode ") + to_string(cfg.mode) + " needs a 'seed'");
    }
    if (!errors.empty()) {
        throw ConfigError(errors);
    }
    return cfg;
}

/// Canonical text of a config: every key the mode uses, defaults included,
/// in a fixed order. parse_config(format_config(c)) reproduces c.
inline std::string format_config(const ExperimentConfig& c, const std::string& version = {}) {
    std::ostringstream out;
    auto kv = [&](const char* k, const std::string& v) { out << k << " = " << v << '\n'; };
    auto list = [](const auto& items, auto&& fmt) {
        std::string s;
        for (const auto& x : items) {
            s += (s.empty() ? "" : ", ") + fmt(x);
        }
        return s;
    };
    kv("mode", to_string(c.mode));
    const bool covariance_modes = c.mode == Mode::Check || c.mode == Mode::Bell || c.mode == Mode::Chsh ||
                                  (c.mode == Mode::Aspect && c.matrix == "qm");
    if (covariance_modes) {
        if (!c.angles.empty()) {
            kv("angles", list(c.angles, [](const std::string& a) { return a; }));
            kv("precision", c.precision);
        } else if (!c.pairs.empty()) {
            for (const auto& p : c.pairs) {
                kv("pair", std::to_string(p.i) + " " + std::to_string(p.j) + " : " +
                               list(p.table, [](const Rational& r) { return r.str(); }));
            }
            kv("arity", std::to_string(*c.arity));
        } else {
            kv("sigmas", list(c.sigmas, [](const Rational& r) { return r.str(); }));
        }
    }
    switch (c.mode) {
    case Mode::Aspect:
        if (c.matrix != "qm") {
            kv("matrix", c.matrix);
        }
        kv("trials", std::to_string(c.trials));
        kv("seed", std::to_string(*c.seed));
        kv("workers", std::to_string(c.workers));
        break;
    case Mode::Source:
        kv("models", std::to_string(c.models));
        kv("support", std::to_string(c.support));
        kv("trials", std::to_string(c.trials));
        kv("reorder_trials", std::to_string(c.reorder_trials));
        kv("seed", std::to_string(*c.seed));
        kv("workers", std::to_string(c.workers));
        break;
    case Mode::Ghz:
    case Mode::GhzNetCoordinator:
        kv("schedule", c.schedule.str());
        kv("trials", std::to_string(c.trials));
        kv("seed", std::to_string(*c.seed));
        kv("rademacher", list(c.rademacher, [](unsigned k) { return std::to_string(k); }));
        if (c.mode == Mode::Ghz) {
            kv("probes", std::to_string(c.probes));
        } else {
            kv("nodes", list(c.nodes, [](const ghz::net::Endpoint& e) { return e.str(); }));
            kv("timeout_ms", std::to_string(c.timeout_ms));
            if (!c.transcript.empty()) {
                kv("transcript", c.transcript);
            }
        }
        if (!c.trials_out.empty()) {
            kv("trials_out", c.trials_out);
        }
        break;
    case Mode::GhzNetNode:
        kv("role", "node" + std::to_string(c.role));
        kv("listen", c.listen.str());
        kv("rademacher", list(c.rademacher, [](unsigned k) { return std::to_string(k); }));
        if (!c.transcript.empty()) {
            kv("transcript", c.transcript);
        }
        break;
    default: break;
    }
    if (!version.empty()) {
        kv("version", version);
    }
    return out.str();
}

/// Built-in configs, one per headline result.
inline const std::map<std::string, std::string>& presets() {
    static const std::map<std::string, std::string> p{
        {"vorobev-table1", "mode = check\nangles = 135deg, 135deg, 90deg\nprecision = 1e-9\n"},
        {"vorobev-uniform",
         "mode = check\npair = 0 1 : 1/4, 1/4, 1/4, 1/4\npair = 0 2 : 1/4, 1/4, 1/4, 1/4\n"
         "pair = 1 2 : 1/4, 1/4, 1/4, 1/4\n"},
        {"bell-table1", "mode = bell\nangles = 135deg, 135deg, 90deg\nprecision = 1e-9\n"},
        {"chsh-qm", "mode = chsh\nangles = 135deg, 135deg, 135deg, 45deg\nprecision = 1e-9\n"},
        {"aspect-qm", "mode = aspect\nangles = 135deg, 135deg, 135deg, 45deg\nprecision = 1e-9\ntrials = 1000000\n"
                      "seed = 1\n"},
        {"gamma-max", "mode = aspect\nmatrix = gamma-max\ntrials = 1000000\nseed = 1\n"},
        {"source-bound", "mode = source\nmodels = 100\nsupport = 8\ntrials = 100000\nreorder_trials = 10000\nseed = 1\n"},
        {"ghz-table5", "mode = ghz\nschedule = default\ntrials = 100000\nseed = 1\nrademacher = 1, 2, 3\nprobes = 1000\n"},
    };
    return p;
}

inline std::string preset_text(const std::string& name) {
    const auto it = presets().find(name);
    if (it == presets().end()) {
        std::string known;
        for (const auto& [k, v] : presets()) {
            known += (known.empty() ? "" : ", ") + k;
        }
        throw ConfigError({"unknown preset '" + name + "' (known: " + known + ")"});
    }
    return it->second;
}

} // namespace corrlab::cli
