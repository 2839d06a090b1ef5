#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "corrlab/aspect.hpp"
#include "corrlab/config.hpp"
#include "corrlab/ghz.hpp"
#include "corrlab/ghz_net.hpp"
#include "corrlab/inequalities.hpp"
#include "corrlab/realizability.hpp"
#include "corrlab/rng.hpp"

#ifndef CORRLAB_VERSION
#define CORRLAB_VERSION "1.0.0"
#endif

namespace corrlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitDomain = 2;
inline constexpr int kExitCapacity = 3;
inline constexpr int kExitNetwork = 4;

inline std::string version_string() { return std::string("corrlab ") + CORRLAB_VERSION; }

/// Provenance block plus result records, in a fixed order.
struct Report {
    std::string config_text;
    std::vector<std::pair<std::string, std::string>> records;
    std::string summary;
    int status = kExitOk;

    void add(std::string key, std::string value) { records.emplace_back(std::move(key), std::move(value)); }

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : records) {
            if (k == key) {
                return &v;
            }
        }
        return nullptr;
    }

    std::string result_text() const {
        std::string s;
        for (const auto& [k, v] : records) {
            s += k + " = " + v + "\n";
        }
        return s;
    }

    std::string text() const { return "[config]\n" + config_text + "[result]\n" + result_text(); }
};

/// Result records of a report text (the [result] section).
inline std::vector<std::pair<std::string, std::string>> parse_result_section(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in{std::string(text)};
    std::string line;
    bool in_result = false;
    while (std::getline(in, line)) {
        if (line == "[result]") {
            in_result = true;
            continue;
        }
        if (!line.empty() && line.front() == '[') {
            in_result = false;
            continue;
        }
        const auto eq = line.find(" = ");
        if (in_result && eq != std::string::npos) {
            out.emplace_back(line.substr(0, eq), line.substr(eq + 3));
        }
    }
    return out;
}

namespace detail {

inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

inline std::string yes(bool b) { return b ? "true" : "false"; }

inline std::string join(const std::vector<std::string>& items, const char* sep = ", ") {
    std::string s;
    for (const auto& x : items) {
        s += (s.empty() ? "" : sep) + x;
    }
    return s;
}

inline std::string rationals(const std::vector<Rational>& v) {
    std::vector<std::string> items;
    for (const auto& r : v) {
        items.push_back(r.str());
    }
    return join(items);
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline void add_realizability(Report& rep, const MarginalSystem& system) {
    const FeasibilityResult res = check_realizability(system);
    rep.add("verdict", to_string(res.verdict));
    rep.add("margin", num(res.margin.to_double()));
    rep.add("margin_exact", res.margin.str());
    rep.add("pivots", std::to_string(res.pivots));
    if (res.feasible()) {
        std::vector<std::string> atoms;
        for (const auto& [atom, mass] : res.witness->atoms()) {
            atoms.push_back(atom.str() + " " + mass.str());
        }
        rep.add("witness", join(atoms, "; "));
        rep.add("witness_verified", yes(verify_certificate(system, res)));
    } else {
        rep.add("certificate", rationals(*res.certificate));
        rep.add("certificate_verified", yes(verify_certificate(system, res)));
    }
}

inline std::string verdict_line(const InequalityVerdict& v) {
    return v.variant + " | lhs " + v.lhs.str() + " (" + num(v.lhs.to_double()) + ") | bound " + v.bound.str() + " (" +
           num(v.bound.to_double()) + ") | " + (v.satisfied ? "satisfied" : "VIOLATED");
}

inline std::vector<Covariance> covariances(const ExperimentConfig& c) {
    std::vector<Covariance> out;
    for (const auto& s : c.sigmas) {
        out.emplace_back(s);
    }
    return out;
}

inline Report run_check(const ExperimentConfig& c) {
    Report rep;
    std::optional<MarginalSystem> system;
    const auto cov = covariances(c);
    if (!c.pairs.empty()) {
        system.emplace(*c.arity);
        for (const auto& p : c.pairs) {
            system->add(PairMarginal(p.i, p.j, p.table));
        }
        rep.add("system", "pairs");
    } else if (cov.size() == 3) {
        system = triangle_system(cov[0], cov[1], cov[2]);
        rep.add("system", "triangle AB, AC, BC");
    } else {
        system = chsh_loop_system(cov[0], cov[1], cov[2], cov[3]);
        rep.add("system", "loop ab, ac, db, dc");
    }
    rep.add("variables", std::to_string(system->arity()));
    rep.add("constraints", std::to_string(system->constraints().size()));
    if (!c.sigmas.empty()) {
        rep.add("sigmas", rationals(c.sigmas));
    }
    add_realizability(rep, *system);
    rep.summary = std::string("check: ") + *rep.find("verdict") + " (margin " + *rep.find("margin") + ", " +
                  (rep.find("certificate_verified") ? "certificate verified: " + *rep.find("certificate_verified")
                                                    : "witness verified: " + *rep.find("witness_verified")) +
                  ")";
    return rep;
}

inline Report run_bell(const ExperimentConfig& c) {
    Report rep;
    const auto cov = covariances(c);
    const BellTriple t{cov[0], cov[1], cov[2]};
    rep.add("sigmas", rationals(c.sigmas));
    const auto verdicts = bell_check_all(t);
    std::size_t violated = 0;
    for (const auto& v : verdicts) {
        rep.add("inequality", verdict_line(v));
        violated += !v.satisfied;
    }
    const bool standard_ok = bell_check(t).satisfied;
    const bool cyclic_violated = !bell_check(t, {BellPivot::B, BellSign::Minus}).satisfied ||
                                 !bell_check(t, {BellPivot::C, BellSign::Minus}).satisfied;
    rep.add("standard_variant_satisfied", yes(standard_ok));
    rep.add("cyclic_variant_violated", yes(cyclic_violated));
    rep.add("all_inequalities_satisfied", yes(violated == 0));
    add_realizability(rep, triangle_system(t.ab, t.ac, t.bc));
    rep.summary = "bell: standard variant " + std::string(standard_ok ? "satisfied" : "violated") + ", " +
                  std::to_string(violated) + " of " + std::to_string(verdicts.size()) +
                  " variants violated, realizability " + *rep.find("verdict");
    return rep;
}

inline Report run_chsh(const ExperimentConfig& c) {
    Report rep;
    const auto cov = covariances(c);
    const ChshQuad q{cov[0], cov[1], cov[2], cov[3]};
    rep.add("sigmas", rationals(c.sigmas));
    const Rational value = chsh_value(q);
    rep.add("chsh_value", num(value.to_double()));
    rep.add("chsh_value_exact", value.str());
    const auto verdicts = chsh_check_all(q);
    std::size_t violated = 0;
    for (const auto& v : verdicts) {
        rep.add("inequality", verdict_line(v));
        violated += !v.satisfied;
    }
    rep.add("all_inequalities_satisfied", yes(violated == 0));
    add_realizability(rep, chsh_loop_system(q.ab, q.ac, q.db, q.dc));
    rep.summary = "chsh: value " + num(value.to_double()) + ", " + std::to_string(violated) + " of " +
                  std::to_string(verdicts.size()) + " variants violated, realizability " + *rep.find("verdict");
    return rep;
}

inline Report run_aspect(const ExperimentConfig& c) {
    using namespace aspect;
    Report rep;
    const StochasticMatrix m = c.matrix == "uniform"     ? StochasticMatrix::uniform()
                               : c.matrix == "gamma-max" ? StochasticMatrix::gamma_max()
                                                         : StochasticMatrix::from_covariances(
                                                               {Covariance(c.sigmas[0]), Covariance(c.sigmas[1]),
                                                                Covariance(c.sigmas[2]), Covariance(c.sigmas[3])});
    for (SettingPair p : kSettingPairs) {
        const auto& row = m.row(p);
        rep.add(std::string("matrix.") + to_string(p), rationals({row.begin(), row.end()}));
    }
    const auto records = sample_delayed_choice(m, c.trials, *c.seed, c.workers);
    const GammaEstimate est = estimate_gamma(records);
    for (std::size_t r = 0; r < 4; ++r) {
        rep.add(std::string("row.") + to_string(kSettingPairs[r]),
                "n " + std::to_string(est.counts[r]) + " | sum " + std::to_string(est.sums[r]) + " | mean " +
                    num(est.means[r]));
    }
    const double pop = m.population_gamma().to_double();
    rep.add("gamma", num(est.gamma));
    rep.add("standard_error", num(est.standard_error));
    rep.add("population_gamma", num(pop));
    rep.add("population_gamma_exact", m.population_gamma().str());
    const double z = est.standard_error > 0 ? (est.gamma - pop) / est.standard_error : (est.gamma == pop ? 0.0 : INFINITY);
    rep.add("deviation_in_se", num(z));
    rep.add("within_5se_of_population", yes(std::fabs(z) <= 5));
    rep.add("exceeds_2", yes(est.gamma > 2));
    rep.summary = "aspect: gamma " + num(est.gamma) + " +/- " + num(est.standard_error) + " (population " + num(pop) +
                  ", " + std::to_string(c.trials) + " trials)";
    return rep;
}

inline Report run_source(const ExperimentConfig& c) {
    using namespace aspect;
    Report rep;
    rng::Engine gen = rng::make_engine(*c.seed, "source.models");
    double max_abs = 0.0;
    double max_excess = -INFINITY;
    bool bound_ok = true;
    ReorderReport total;
    for (std::uint64_t k = 0; k < c.models; ++k) {
        const SourceModel model = random_source_model(gen, c.support);
        const GammaEstimate est = simulate_source_model(model, c.trials, rng::derive_seed(*c.seed, "source.run", k), c.workers);
        const double a = std::fabs(est.gamma);
        max_abs = std::max(max_abs, a);
        const bool ok = a <= 2 + 5 * est.standard_error;
        bound_ok = bound_ok && ok;
        if (est.standard_error > 0) {
            max_excess = std::max(max_excess, (a - 2) / est.standard_error);
        }
        std::string line = "support " + std::to_string(model.support()) + " | population " +
                           model.population_gamma().str() + " | gamma " + num(est.gamma) + " | se " +
                           num(est.standard_error) + " | " + (ok ? "ok" : "EXCEEDS");
        if (c.reorder_trials > 0) {
            const ReorderReport rr =
                reorder_demonstration(model, c.reorder_trials, rng::derive_seed(*c.seed, "source.reorder", k), c.workers);
            total.records += rr.records;
            total.quadruples += rr.quadruples;
            total.plus_two += rr.plus_two;
            total.minus_two += rr.minus_two;
            total.exceptions += rr.exceptions;
            total.discarded += rr.discarded;
            line += " | quadruples " + std::to_string(rr.quadruples) + " (+2: " + std::to_string(rr.plus_two) +
                    ", -2: " + std::to_string(rr.minus_two) + ", other: " + std::to_string(rr.exceptions) + ")";
        }
        rep.add("model." + std::to_string(k), line);
    }
    rep.add("max_abs_gamma", num(max_abs));
    rep.add("max_excess_over_2_in_se", std::isinf(max_excess) ? "none" : num(max_excess));
    rep.add("bound_respected", yes(bound_ok));
    if (c.reorder_trials > 0) {
        rep.add("reorder_policy", ReorderReport::policy);
        rep.add("reorder_records", std::to_string(total.records));
        rep.add("reorder_quadruples", std::to_string(total.quadruples));
        rep.add("reorder_plus_two", std::to_string(total.plus_two));
        rep.add("reorder_minus_two", std::to_string(total.minus_two));
        rep.add("reorder_exceptions", std::to_string(total.exceptions));
        rep.add("reorder_discarded", std::to_string(total.discarded));
    }
    rep.summary = "source: " + std::to_string(c.models) + " models, max |gamma| " + num(max_abs) + ", bound " +
                  (bound_ok ? "respected" : "EXCEEDED") +
                  (c.reorder_trials > 0 ? ", reorder exceptions " + std::to_string(total.exceptions) : "");
    return rep;
}

inline void add_products(Report& rep, const std::vector<ghz::TrialTriple>& trials) {
    const auto table = ghz::tabulate(trials);
    for (ghz::Regime r : ghz::kRegimes) {
        const auto& pc = table[r];
        rep.add(std::string("products.") + ghz::to_string(r),
                "trials " + std::to_string(pc.trials) + " | +1 " + std::to_string(pc.plus) + " | -1 " +
                    std::to_string(pc.minus) + " | required " + (ghz::expected_product(r) > 0 ? "+1" : "-1"));
    }
    rep.add("identities_exact", yes(table.exact()));
}

inline std::string trials_digest(const std::string& text) { return hex64(rng::fnv1a(text)); }

inline void write_trials(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text) || !out.flush()) {
        throw DomainError("cannot write trials to " + path);
    }
}

inline std::string product_summary(const std::vector<ghz::TrialTriple>& trials) {
    const auto table = ghz::tabulate(trials);
    std::vector<std::string> parts;
    for (ghz::Regime r : ghz::kRegimes) {
        const auto& pc = table[r];
        const std::string v = pc.trials == 0 ? "n/a" : pc.minus == pc.trials ? "-1" : pc.plus == pc.trials ? "+1" : "mixed";
        parts.push_back(std::string(ghz::to_string(r)) + " " + v);
    }
    return join(parts);
}

inline Report run_ghz(const ExperimentConfig& c) {
    using namespace ghz;
    Report rep;
    const NodeAssignment a = c.assignment();
    rep.add("symbolic_identities", yes(a.satisfies_identities()));
    const auto trials = run_experiment(c.schedule, c.trials, *c.seed, a);
    add_products(rep, trials);

    // Balance of each node's outputs per window.
    const unsigned kmin = std::min({c.rademacher[0], c.rademacher[1], c.rademacher[2]});
    const Rational period(1, 1L << (kmin - 1));
    bool full_period = true;
    bool balanced = true;
    for (const auto& w : c.schedule.windows()) {
        full_period = full_period && ((w.end - w.start) / period).is_integer();
        std::vector<TrialTriple> in_window;
        for (const auto& tr : trials) {
            if (tr.regime == w.regime) {
                in_window.push_back(tr);
            }
        }
        const double tol = 5 * std::sqrt(0.25 / static_cast<double>(in_window.size()));
        std::vector<std::string> fr;
        for (int node = 1; node <= 3; ++node) {
            const double f = marginal_balance(in_window, node);
            balanced = balanced && std::fabs(f - 0.5) <= tol;
            fr.push_back(num(f));
        }
        rep.add(std::string("plus_fraction.") + to_string(w.regime), join(fr));
    }
    rep.add("full_period_windows", yes(full_period));
    rep.add("balance_within_5sigma", yes(balanced));

    if (c.probes > 0) {
        rng::Engine eng = rng::make_engine(*c.seed, "ghz.probe");
        std::uint64_t y3_minus = 0;
        std::uint64_t y1_plus = 0;
        for (std::uint64_t i = 0; i < c.probes; ++i) {
            const auto m = static_cast<long>(1 + rng::uniform_below(eng, kTimeGrid - 1));
            const ProbeReport p = counterfactual_probe(a, Rational(m, 1L << 29));
            y3_minus += p.y3_product() == -1;
            y1_plus += p.y1_product() == 1;
        }
        rep.add("probe_times", std::to_string(c.probes));
        rep.add("probe_y3_yxy_times_y3_xyy_minus_one", std::to_string(y3_minus));
        rep.add("probe_y1_yyx_times_y1_yxy_plus_one", std::to_string(y1_plus));
    }
    const std::string text = format_trials(trials);
    rep.add("trials_digest", trials_digest(text));
    if (!c.trials_out.empty()) {
        write_trials(c.trials_out, text);
    }
    rep.summary = "ghz: products " + product_summary(trials) + " over " + std::to_string(trials.size()) +
                  " trials, exact: " + *rep.find("identities_exact");
    return rep;
}

inline Report run_coordinator(const ExperimentConfig& c) {
    using namespace ghz;
    Report rep;
    net::CoordinatorOptions opt;
    opt.schedule = c.schedule;
    opt.trials_per_regime = c.trials;
    opt.seed = *c.seed;
    opt.nodes = c.nodes;
    opt.transcript_path = c.transcript;
    opt.result_timeout_ms = c.timeout_ms;
    opt.connect_timeout_ms = c.timeout_ms;
    const net::SessionResult res = net::coordinator_run(opt);
    rep.add("aborted", yes(res.aborted));
    if (res.aborted) {
        rep.add("abort_reason", res.abort_reason);
    }
    rep.add("trials_completed", std::to_string(res.trials.size()));
    rep.add("void_trials", std::to_string(res.void_trials.size()));
    add_products(rep, res.trials);
    const auto verified = net::verify_transcript(res.transcript, c.assignment());
    rep.add("transcript_entries", std::to_string(res.transcript.size()));
    rep.add("transcript_mismatches", std::to_string(verified.mismatches.size()));
    rep.add("forwarding_violations", std::to_string(verified.forwarding.size()));
    rep.add("transcript_verified", yes(verified.ok() && verified.trials == res.trials));
    const std::string text = format_trials(res.trials);
    rep.add("trials_digest", trials_digest(text));
    const bool same = !res.aborted && res.void_trials.empty() &&
                      text == format_trials(run_experiment(c.schedule, c.trials, *c.seed, c.assignment()));
    rep.add("matches_in_process", yes(same));
    if (!c.trials_out.empty()) {
        write_trials(c.trials_out, text);
    }
    rep.summary = "ghz-net: " + std::to_string(res.trials.size()) + " trials, " +
                  std::to_string(res.void_trials.size()) + " void, products " + product_summary(res.trials) +
                  ", transcript verified: " + *rep.find("transcript_verified") +
                  (res.aborted ? ", ABORTED: " + res.abort_reason : "");
    if (res.aborted) {
        rep.status = kExitNetwork;
    }
    return rep;
}

inline Report run_node(const ExperimentConfig& c, std::ostream* live) {
    Report rep;
    ghz::net::NodeOptions opt;
    opt.node = c.role;
    opt.assignment = c.assignment();
    opt.listen = c.listen;
    opt.transcript_path = c.transcript;
    opt.on_listening = [&](std::uint16_t port) {
        if (live) {
            *live << "LISTENING " << port << std::endl;
        }
    };
    const auto s = ghz::net::node_serve(opt);
    rep.add("node", std::to_string(c.role));
    rep.add("answered", std::to_string(s.answered));
    rep.add("errors", std::to_string(s.errors));
    rep.add("done", yes(s.done));
    rep.summary = "ghz-net node" + std::to_string(c.role) + ": answered " + std::to_string(s.answered) + ", errors " +
                  std::to_string(s.errors);
    if (!s.done) {
        rep.status = kExitNetwork;
    }
    return rep;
}

} // namespace detail

/// Runs a validated config. `live` receives progress lines that must appear
/// before the report (the node's LISTENING line).
inline Report run(const ExperimentConfig& config, std::ostream* live = nullptr) {
    Report rep;
    switch (config.mode) {
    case Mode::Check: rep = detail::run_check(config); break;
    case Mode::Bell: rep = detail::run_bell(config); break;
    case Mode::Chsh: rep = detail::run_chsh(config); break;
    case Mode::Aspect: rep = detail::run_aspect(config); break;
    case Mode::Source: rep = detail::run_source(config); break;
    case Mode::Ghz: rep = detail::run_ghz(config); break;
    case Mode::GhzNetCoordinator: rep = detail::run_coordinator(config); break;
    case Mode::GhzNetNode: rep = detail::run_node(config, live); break;
    }
    rep.config_text = format_config(config, version_string());
    return rep;
}

/// Maps an exception escaping run() to its exit status.
inline int exit_status_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) {
        return kExitConfig;
    }
    if (dynamic_cast<const CapacityError*>(&e)) {
        return kExitCapacity;
    }
    if (dynamic_cast<const NetworkError*>(&e) || dynamic_cast<const ProtocolError*>(&e)) {
        return kExitNetwork;
    }
    return kExitDomain;
}

} // namespace corrlab::cli
