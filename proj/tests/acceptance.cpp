// Acceptance run: one PASS/FAIL line per criterion.

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "corrlab/cli.hpp"

extern char** environ;

namespace {

using namespace corrlab;
namespace fs = std::filesystem;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

const std::string& record(const cli::Report& rep, const std::string& key) {
    static const std::string missing = "<missing>";
    const std::string* v = rep.find(key);
    return v ? *v : missing;
}

cli::Report run_text(const std::string& text) { return cli::run(cli::parse_config(text)); }

// Witness text "(+1,-1,+1) 1/4; ..." summed into the pair table of (i, j),
// order ++, +-, -+, --.
std::array<Rational, 4> witness_pair(const std::string& witness, std::size_t i, std::size_t j) {
    std::array<Rational, 4> cell{};
    std::istringstream in(witness);
    std::string item;
    while (std::getline(in, item, ';')) {
        const auto open = item.find('(');
        const auto close = item.find(')');
        std::vector<int> signs;
        std::istringstream atoms(item.substr(open + 1, close - open - 1));
        std::string s;
        while (std::getline(atoms, s, ',')) {
            signs.push_back(s == "+1" ? 1 : -1);
        }
        const Rational mass = Rational::parse(cli::detail::trim(item.substr(close + 1)));
        cell[(signs[i] < 0 ? 2 : 0) + (signs[j] < 0 ? 1 : 0)] += mass;
    }
    return cell;
}

Outcome criterion1() {
    Outcome o;
    const auto infeasible = run_text(cli::preset_text("vorobev-table1"));
    o.require(record(infeasible, "verdict") == "INFEASIBLE", "table1 verdict " + record(infeasible, "verdict"));
    o.require(record(infeasible, "certificate_verified") == "true", "certificate not verified");

    // Independent re-check of the certificate against the 3-variable system.
    const auto cfg = cli::parse_config(cli::preset_text("vorobev-table1"));
    const auto system = triangle_system(Covariance(cfg.sigmas[0]), Covariance(cfg.sigmas[1]), Covariance(cfg.sigmas[2]));
    const auto res = check_realizability(system);
    o.require(res.certificate.has_value() && verify_certificate(system, res), "library certificate rejected");

    const auto feasible = run_text(cli::preset_text("vorobev-uniform"));
    o.require(record(feasible, "verdict") == "FEASIBLE", "uniform verdict " + record(feasible, "verdict"));
    const std::string& witness = record(feasible, "witness");
    for (auto [i, j] : {std::pair<std::size_t, std::size_t>{0, 1}, {0, 2}, {1, 2}}) {
        const auto cells = witness_pair(witness, i, j);
        for (const auto& c : cells) {
            o.require(c == Rational(1, 4), "witness marginal " + std::to_string(i) + std::to_string(j) + " = " + c.str());
        }
    }
    o.detail = o.pass ? "INFEASIBLE with verified certificate; uniform tables FEASIBLE, witness marginals all 1/4" : o.detail;
    return o;
}

Outcome criterion2() {
    Outcome o;
    const auto cfg = cli::parse_config(cli::preset_text("chsh-qm"));
    const double root = 1.0 / std::sqrt(2.0);
    const std::array<double, 4> target{root, root, root, -root};
    for (std::size_t k = 0; k < 4; ++k) {
        o.require(std::fabs(cfg.sigmas[k].to_double() - target[k]) <= 1e-9, "sigma " + std::to_string(k + 1));
    }
    const auto rep = cli::run(cfg);
    o.require(record(rep, "verdict") == "INFEASIBLE", "verdict " + record(rep, "verdict"));
    o.require(record(rep, "certificate_verified") == "true", "certificate not verified");
    o.detail = o.pass ? "loop system INFEASIBLE, margin " + record(rep, "margin") : o.detail;
    return o;
}

Outcome criterion3() {
    Outcome o;
    const auto rep = run_text("mode = bell\nangles = 135deg, 135deg, 90deg\nprecision = 1e-9\n");
    o.require(record(rep, "standard_variant_satisfied") == "true", "standard variant not satisfied");
    bool lhs_zero = false;
    for (const auto& [k, v] : rep.records) {
        if (k == "inequality" && v.rfind("bell-/A ", 0) == 0) {
            lhs_zero = v.find("| lhs 0 (0) | bound 1 (1) | satisfied") != std::string::npos;
        }
    }
    o.require(lhs_zero, "standard variant lhs is not 0 <= 1");
    o.require(record(rep, "cyclic_variant_violated") == "true", "no cyclic variant violated");
    o.require(record(rep, "verdict") == "INFEASIBLE", "verdict " + record(rep, "verdict"));
    o.detail = o.pass ? "lhs 0 <= 1, cyclic variant violated, INFEASIBLE (one report)" : o.detail;
    return o;
}

Outcome criterion4() {
    Outcome o;
    std::uint64_t points = 0;
    std::uint64_t discrepancies = 0;
    auto triangle = [&](const Rational& a, const Rational& b, const Rational& c) {
        const BellTriple t{Covariance(a), Covariance(b), Covariance(c)};
        const bool ineq = all_satisfied(bell_check_all(t));
        const bool real = check_realizability(triangle_system(t.ab, t.ac, t.bc)).feasible();
        ++points;
        if (ineq != real && discrepancies++ < 3) {
            o.require(false, "n=3 at (" + a.str() + ", " + b.str() + ", " + c.str() + ")");
        }
    };
    auto loop = [&](const std::array<Rational, 4>& s) {
        const ChshQuad q{Covariance(s[0]), Covariance(s[1]), Covariance(s[2]), Covariance(s[3])};
        const bool ineq = all_satisfied(chsh_check_all(q));
        const bool real = check_realizability(chsh_loop_system(q.ab, q.ac, q.db, q.dc)).feasible();
        ++points;
        if (ineq != real && discrepancies++ < 3) {
            o.require(false, "n=4 at (" + s[0].str() + ", " + s[1].str() + ", " + s[2].str() + ", " + s[3].str() + ")");
        }
    };

    std::uint64_t grid3 = 0;
    for (long a = -10; a <= 10; ++a) {
        for (long b = -10; b <= 10; ++b) {
            for (long c = -10; c <= 10; ++c) {
                triangle(Rational(a, 10), Rational(b, 10), Rational(c, 10));
                ++grid3;
            }
        }
    }
    std::uint64_t grid4 = 0;
    for (long a = -4; a <= 4; ++a) {
        for (long b = -4; b <= 4; ++b) {
            for (long c = -4; c <= 4; ++c) {
                for (long d = -4; d <= 4; ++d) {
                    loop({Rational(a, 4), Rational(b, 4), Rational(c, 4), Rational(d, 4)});
                    ++grid4;
                }
            }
        }
    }
    rng::Engine eng = rng::make_engine(20240521, "acceptance.loop");
    for (int k = 0; k < 10000; ++k) {
        std::array<Rational, 4> s;
        for (auto& x : s) {
            const auto den = static_cast<long>(1 + rng::uniform_below(eng, 1000));
            const auto num = static_cast<long>(rng::uniform_below(eng, static_cast<std::uint64_t>(2 * den + 1))) - den;
            x = Rational(num, den);
        }
        loop(s);
    }
    o.require(grid3 == 9261, "n=3 grid has " + std::to_string(grid3) + " points");
    o.require(discrepancies == 0, std::to_string(discrepancies) + " discrepancies");
    if (o.pass) {
        o.detail = std::to_string(points) + " points (" + std::to_string(grid3) + " + " + std::to_string(grid4) +
                   " + 10000 random), 0 discrepancies";
    }
    return o;
}

bool gamma_within(const cli::Report& rep, double target, Outcome& o, const std::string& label) {
    const double g = std::stod(record(rep, "gamma"));
    const double se = std::stod(record(rep, "standard_error"));
    const bool ok = std::fabs(g - target) <= 5 * se;
    o.require(ok, label + " gamma " + record(rep, "gamma") + " se " + record(rep, "standard_error"));
    return ok;
}

Outcome criterion5() {
    Outcome o;
    const auto qm = run_text("mode = aspect\nangles = 135deg, 135deg, 135deg, 45deg\nprecision = 1e-9\n"
                             "trials = 1000000\nseed = 1\n");
    gamma_within(qm, 2 * std::sqrt(2.0), o, "qm");
    const auto max = run_text(cli::preset_text("gamma-max"));
    gamma_within(max, 4.0, o, "gamma-max");
    o.detail = o.pass ? "qm gamma " + record(qm, "gamma") + " +/- " + record(qm, "standard_error") +
                            ", gamma-max " + record(max, "gamma") + " +/- " + record(max, "standard_error")
                      : o.detail;
    return o;
}

Outcome criterion6() {
    Outcome o;
    const std::uint64_t seed = 1;
    rng::Engine gen = rng::make_engine(seed, "acceptance.models");
    double worst = -INFINITY;
    std::uint64_t quadruples = 0;
    std::uint64_t exceptions = 0;
    for (std::uint64_t k = 0; k < 100; ++k) {
        const auto model = aspect::random_source_model(gen, 8);
        const auto records = aspect::sample_source_model(model, 100000, rng::derive_seed(seed, "acceptance.run", k), 4);
        const auto est = aspect::estimate_gamma(std::span<const aspect::SourceRecord>(records));
        if (std::fabs(est.gamma) > 2 + 5 * est.standard_error) {
            o.require(false, "model " + std::to_string(k) + " gamma " + std::to_string(est.gamma));
        }
        if (est.standard_error > 0) {
            worst = std::max(worst, (std::fabs(est.gamma) - 2) / est.standard_error);
        }

        const auto rr = aspect::reorder_records(records, model.support());
        exceptions += rr.exceptions;
        quadruples += rr.quadruples;
        // Every quadruple of one lambda carries that lambda's gamma; check it is +/-2
        // and the per-lambda counts add up.
        std::uint64_t expected_plus = 0;
        std::uint64_t expected_minus = 0;
        for (const auto& g : rr.groups) {
            const auto& r = model.responses()[g.lambda];
            const int gamma = r.a * r.b + r.a * r.c + r.d * r.b - r.d * r.c;
            o.require(gamma == 2 || gamma == -2, "lambda gamma " + std::to_string(gamma));
            (gamma > 0 ? expected_plus : expected_minus) += g.quadruples;
        }
        o.require(rr.plus_two == expected_plus && rr.minus_two == expected_minus,
                  "model " + std::to_string(k) + " quadruple tally");
    }
    o.require(exceptions == 0, std::to_string(exceptions) + " reorder exceptions");
    if (o.pass) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "100 models, max (|gamma|-2)/se %.3f; %llu quadruples, 0 exceptions", worst,
                      static_cast<unsigned long long>(quadruples));
        o.detail = buf;
    }
    return o;
}

Outcome criterion7() {
    Outcome o;
    const auto schedule = ghz::Schedule::standard();
    const auto trials = ghz::run_experiment(schedule, 100000, 7, ghz::NodeAssignment::table5());
    std::map<ghz::Regime, std::array<std::uint64_t, 3>> plus;
    std::map<ghz::Regime, std::uint64_t> count;
    std::uint64_t wrong = 0;
    for (const auto& tr : trials) {
        const int p = tr.outputs[0] * tr.outputs[1] * tr.outputs[2];
        wrong += p != (tr.regime == ghz::Regime::xxx ? 1 : -1);
        ++count[tr.regime];
        for (int k = 0; k < 3; ++k) {
            plus[tr.regime][k] += tr.outputs[k] == 1;
        }
    }
    o.require(wrong == 0, std::to_string(wrong) + " trials with the wrong product");
    double worst = 0;
    for (const auto& w : schedule.windows()) {
        o.require(w.end - w.start == Rational(1), "window is not a full period");
        const double n = static_cast<double>(count[w.regime]);
        o.require(count[w.regime] == 100000, "trial count");
        for (int k = 0; k < 3; ++k) {
            const double z = std::fabs(static_cast<double>(plus[w.regime][k]) / n - 0.5) / std::sqrt(0.25 / n);
            worst = std::max(worst, z);
            o.require(z <= 5, "balance node " + std::to_string(k + 1));
        }
    }
    if (o.pass) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "400000 trials, every product exact; worst balance deviation %.2f sigma", worst);
        o.detail = buf;
    }
    return o;
}

// Sign of sin(2^k pi t) in long double; t is kept away from the zeros.
int sine_sign(unsigned k, long double t) { return std::sin(std::ldexp(t, static_cast<int>(k)) * 3.14159265358979323846264338327950288L) >= 0 ? 1 : -1; }

int oracle_response(const std::string& expr, long double t) {
    int v = expr[0] == '-' ? -1 : 1;
    std::string body = expr[0] == '-' ? expr.substr(1) : expr;
    std::istringstream in(body);
    std::string factor;
    while (std::getline(in, factor, '*')) {
        if (factor != "1") {
            v *= sine_sign(static_cast<unsigned>(std::stoul(factor.substr(1))), t);
        }
    }
    return v;
}

Outcome criterion8() {
    Outcome o;
    const auto a = ghz::NodeAssignment::table5();
    rng::Engine eng = rng::make_engine(99, "acceptance.probe");
    int checked = 0;
    while (checked < 1000) {
        const auto m = static_cast<long>(1 + rng::uniform_below(eng, (1UL << 32U) - 1));
        if (m % (1L << 26) == 0) {
            continue;
        }
        const Rational t(m, 1L << 29);
        const auto p = ghz::counterfactual_probe(a, t);
        o.require(p.y3_product() == -1, "library product at t = " + t.str());
        const long double tl = static_cast<long double>(m) / static_cast<long double>(1L << 29);
        const int y3 = oracle_response(a.at(3, ghz::Regime::yxy).str(), tl) *
                       oracle_response(a.at(3, ghz::Regime::xyy).str(), tl);
        o.require(y3 == -1, "oracle product at t = " + t.str());
        ++checked;
    }
    o.detail = o.pass ? "1000 random times, Y3(yxy) * Y3(xyy) = -1 at every one" : o.detail;
    return o;
}

#ifdef CORRLAB_CLI_PATH
struct Child {
    pid_t pid = -1;
    int out = -1;
};

Child spawn(const std::vector<std::string>& args) {
    int fds[2];
    if (pipe(fds) != 0) {
        throw std::runtime_error("pipe failed");
    }
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_adddup2(&fa, fds[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&fa, fds[0]);
    std::vector<char*> argv;
    for (const auto& s : args) {
        argv.push_back(const_cast<char*>(s.c_str()));
    }
    argv.push_back(nullptr);
    Child c;
    const int rc = posix_spawn(&c.pid, argv[0], &fa, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&fa);
    close(fds[1]);
    if (rc != 0) {
        close(fds[0]);
        throw std::runtime_error("cannot spawn " + args[0]);
    }
    c.out = fds[0];
    return c;
}

// Reads until `stop` is seen or the stream ends.
std::string read_until(int fd, const std::string& stop, int timeout_ms) {
    std::string buf;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    char chunk[4096];
    while (stop.empty() || buf.find(stop) == std::string::npos) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        pollfd p{fd, POLLIN, 0};
        if (left.count() <= 0 || poll(&p, 1, static_cast<int>(left.count())) <= 0) {
            break;
        }
        const ssize_t n = read(fd, chunk, sizeof(chunk));
        if (n <= 0) {
            break;
        }
        buf.append(chunk, static_cast<std::size_t>(n));
    }
    return buf;
}

int reap(const Child& c) {
    int status = 0;
    waitpid(c.pid, &status, 0);
    close(c.out);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome criterion9() {
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / ("corrlab-acceptance-" + std::to_string(getpid()));
    fs::create_directories(dir);
    const std::string bin = CORRLAB_CLI_PATH;

    std::vector<Child> nodes;
    std::vector<std::string> endpoints;
    for (int k = 1; k <= 3; ++k) {
        const fs::path conf = dir / ("node" + std::to_string(k) + ".conf");
        std::ofstream(conf) << "mode = ghz-net-node\nrole = node" << k << "\ntranscript = "
                            << (dir / ("node" + std::to_string(k) + ".transcript")).string() << "\n";
        nodes.push_back(spawn({bin, "--config", conf.string(), "--listen", "127.0.0.1:0"}));
        const std::string line = read_until(nodes.back().out, "\n", 10000);
        if (line.rfind("LISTENING ", 0) != 0) {
            o.require(false, "node " + std::to_string(k) + " did not report a port");
            endpoints.push_back("127.0.0.1:1");
            continue;
        }
        endpoints.push_back("127.0.0.1:" + line.substr(10, line.find('\n') - 10));
    }

    const fs::path coord_conf = dir / "coordinator.conf";
    const fs::path net_trials = dir / "net.trials";
    std::ofstream(coord_conf) << "mode = ghz-net-coordinator\nseed = 424242\ntrials = 1000\ntranscript = "
                              << (dir / "coordinator.transcript").string() << "\ntrials_out = " << net_trials.string()
                              << "\n";
    Child coord = spawn({bin, "--config", coord_conf.string(), "--role", "coordinator", "--nodes",
                         endpoints[0] + "," + endpoints[1] + "," + endpoints[2]});
    const std::string coord_report = read_until(coord.out, "", 60000);
    const int coord_status = reap(coord);
    o.require(coord_status == 0, "coordinator exit status " + std::to_string(coord_status));
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (coord_status != 0) {
            kill(nodes[k].pid, SIGTERM);
        }
        read_until(nodes[k].out, "", 10000);
        o.require(reap(nodes[k]) == 0, "node " + std::to_string(k + 1) + " exit status");
    }

    const fs::path local_trials = dir / "local.trials";
    run_text("mode = ghz\nseed = 424242\ntrials = 1000\nprobes = 0\ntrials_out = " + local_trials.string() + "\n");
    const std::string net = slurp(net_trials);
    const std::string local = slurp(local_trials);
    o.require(!local.empty() && net == local, "trial lists differ");

    // No node may ever receive a RESULT: inspect each node's own log.
    std::uint64_t inbound_results = 0;
    std::uint64_t inbound = 0;
    for (int k = 1; k <= 3; ++k) {
        const auto entries = ghz::net::read_transcript((dir / ("node" + std::to_string(k) + ".transcript")).string());
        for (const auto& e : entries) {
            if (e.dir == ghz::net::to_node(k)) {
                ++inbound;
                inbound_results += e.payload.rfind("RESULT", 0) == 0;
            }
        }
    }
    const auto coord_log = ghz::net::read_transcript((dir / "coordinator.transcript").string());
    const auto verified = ghz::net::verify_transcript(coord_log, ghz::NodeAssignment::table5());
    o.require(inbound > 0, "node transcripts are empty");
    o.require(inbound_results == 0, std::to_string(inbound_results) + " RESULT records reached a node");
    o.require(verified.ok(), "coordinator transcript failed verification");
    o.require(coord_report.find("matches_in_process = true") != std::string::npos, "report does not match");
    if (o.pass) {
        o.detail = "4 processes, " + std::to_string(std::count(net.begin(), net.end(), '\n')) +
                   " trials byte-identical; " + std::to_string(inbound) + " node-inbound records, 0 RESULT";
        fs::remove_all(dir);
    } else {
        o.detail += " (files kept in " + dir.string() + ")";
    }
    return o;
}
#else
Outcome criterion9() { return {false, "built without the command-line tool"}; }
#endif

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 Triangle infeasibility and uniform witness (< 1 s)", criterion1},
        {"2 CHSH closed-loop infeasibility (< 1 s)", criterion2},
        {"3 Bell-satisfied-yet-infeasible", criterion3},
        {"4 Equivalence property (< 10 min)", criterion4},
        {"5 gamma beyond 2 (< 30 s each)", criterion5},
        {"6 Source-model bound (< 2 min)", criterion6},
        {"7 GHZ exactness (< 30 s)", criterion7},
        {"8 Counterfactual probe (< 1 s)", criterion8},
        {"9 Networked equivalence (< 1 min)", criterion9},
    };
    const std::array<double, 9> limits{1, 1, INFINITY, 600, 60, 120, 30, 1, 60};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > limits[i]) {
            o.pass = false;
            o.detail += " (over the runtime limit)";
        }
        failed += !o.pass;
        std::printf("%s  criterion %s  [%.3f s]  %s\n", o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
