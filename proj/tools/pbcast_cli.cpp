#include "pbcast/adversaries.hpp"
#include "pbcast/bounds.hpp"
#include "pbcast/epidemics.hpp"
#include "pbcast/optimizer.hpp"
#include "pbcast/simnet.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>

using namespace pbcast;

namespace {

struct ParamFlags {
    ProtocolParams p = default_params();

    void attach(CLI::App* cmd) {
        cmd->add_option("--g", p.g, "expected gossip sample size");
        cmd->add_option("--e", p.e, "echo sample size");
        cmd->add_option("--e-hat", p.e_hat, "echo threshold");
        cmd->add_option("--r", p.r, "ready sample size");
        cmd->add_option("--r-hat", p.r_hat, "ready threshold");
        cmd->add_option("--d", p.d, "delivery sample size");
        cmd->add_option("--d-hat", p.d_hat, "delivery threshold");
    }
};

// Writes to --out when given, stdout otherwise.
class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty()) return;
        file_.open(path);
        if (!file_) throw ConfigError("cannot open output file " + path);
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

std::uint64_t effective_seed(std::uint64_t flag) {
    if (const char* env = std::getenv("SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError(std::string("SEED is not an unsigned integer: ") + env);
        }
    }
    return flag;
}

nlohmann::json report_json(const PropertyReport& r, std::uint64_t runs) {
    return {{"no_duplication", r.no_duplication ? 0 : runs}, {"integrity", r.integrity ? 0 : runs},
            {"validity", r.validity ? 0 : runs},             {"total_validity", r.total_validity ? 0 : runs},
            {"totality", r.totality ? 0 : runs},             {"consistency", r.consistency ? 0 : runs}};
}

void add_counts(nlohmann::json& acc, const PropertyReport& r) {
    nlohmann::json one = report_json(r, 1);
    if (acc.is_null()) acc = nlohmann::json::object();
    for (auto& [k, v] : one.items()) acc[k] = acc.value(k, 0) + v.get<int>();
}

nlohmann::json simulate(std::uint32_t n, double f, const ProtocolParams& params, const std::string& adversary,
                        std::uint64_t trials, std::uint64_t seed) {
    const auto config = make_config(n, f);
    params.validate();
    nlohmann::json out{{"n", n}, {"f", f}, {"adversary", adversary}, {"trials", trials}, {"seed", seed}};
    if (adversary == "passive") {
        nlohmann::json pb, pcb, prb;
        std::uint64_t disconnected = 0;
        for (std::uint64_t t = 0; t < trials; ++t) {
            WorldOptions o;
            o.seed = Rng(seed).split(t).seed();
            SimWorld w(config, params, o);
            auto adv = passive_adversary();
            auto s = run_to_quiescence(w, *adv);
            disconnected += !gossip_graph_connected(w);
            add_counts(pb, s.pb);
            add_counts(pcb, s.pcb);
            add_counts(prb, s.prb);
        }
        out["gossip_disconnected"] = disconnected;
        out["violations"] = {{"pb", pb}, {"pcb", pcb}, {"prb", prb}};
        return out;
    }
    std::uint64_t hits = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        const auto s = Rng(seed).split(t).seed();
        if (adversary == "sieve-two-phase")
            hits += run_simplified_sieve_game(config, params, default_two_phase_table(config.correct_count()), s)
                        .consistency_violated;
        else if (adversary == "contagion-consistency")
            hits += run_contagion_consistency_attack(config, params, s).violated;
        else if (adversary == "contagion-totality")
            hits += run_contagion_totality_attack(config, params, s).violated;
        else
            throw ConfigError("unknown adversary: " + adversary);
    }
    out["successes"] = hits;
    out["frequency"] = trials ? double(hits) / double(trials) : 0.0;
    return out;
}

std::vector<double> parse_grid(const std::vector<std::string>& items) {
    std::vector<double> grid;
    for (const auto& s : items) {
        try {
            std::size_t used = 0;
            grid.push_back(std::stod(s, &used));
            if (used != s.size()) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw ConfigError("bad grid value: " + s);
        }
    }
    if (grid.empty()) throw ConfigError("empty grid");
    return grid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probabilistic Byzantine broadcast: simulation and security bounds"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string out_path;
    app.add_option("--out", out_path, "write output here instead of stdout");

    std::uint32_t n = 1024;
    double f = 0.1;
    std::uint64_t seed = 0;
    ParamFlags pf;

    auto* sim = app.add_subcommand("simulate", "Monte Carlo property frequencies");
    std::string adversary = "passive";
    std::uint64_t trials = 100;
    sim->add_option("--n", n)->capture_default_str();
    sim->add_option("--f", f)->capture_default_str();
    sim->add_option("--seed", seed, "overridden by the SEED environment variable");
    sim->add_option("--adversary", adversary)
        ->check(CLI::IsMember({"passive", "sieve-two-phase", "contagion-consistency", "contagion-totality"}));
    sim->add_option("--trials", trials);
    pf.attach(sim);

    auto* bnd = app.add_subcommand("bound", "security bounds as JSON");
    bnd->add_option("--n", n);
    bnd->add_option("--f", f);
    pf.attach(bnd);

    auto* gam = app.add_subcommand("gamma", "Threshold Contagion distribution as JSON");
    GameParams gp;
    gam->add_option("--n", gp.n)->required();
    gam->add_option("--r", gp.r)->required();
    gam->add_option("--l", gp.l);
    gam->add_option("--k", gp.k);
    gam->add_option("--s", gp.s);
    gam->add_option("--rhat", gp.r_hat);

    auto* swp = app.add_subcommand("sweep", "optimized bounds along one axis as CSV");
    std::string axis = "S";
    std::vector<std::string> grid;
    std::uint32_t s = 64;
    std::uint32_t budget = OptimizeOptions{}.budget;
    bool equal = false, fixed = false;
    swp->add_option("--axis", axis)->check(CLI::IsMember({"S", "N", "f", "s", "n"}));
    swp->add_option("--grid", grid)->required()->expected(1, -1);
    swp->add_option("--n", n);
    swp->add_option("--f", f);
    swp->add_option("--s", s);
    swp->add_option("--budget", budget);
    swp->add_flag("--equal", equal, "keep G = E = R = D");
    swp->add_flag("--fixed", fixed, "evaluate the given params instead of optimizing");
    pf.attach(swp);

    auto* opt = app.add_subcommand("optimize", "best parameters for an average sample size");
    opt->add_option("--n", n);
    opt->add_option("--f", f);
    opt->add_option("--s", s)->required();
    opt->add_option("--budget", budget);
    opt->add_flag("--equal", equal, "keep G = E = R = D");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        Output out(out_path);
        auto& os = out.stream();
        OptimizeOptions oo;
        oo.budget = budget;
        oo.mode = equal ? SizeMode::equal : SizeMode::free;
        if (sim->parsed()) {
            os << simulate(n, f, pf.p, adversary, trials, effective_seed(seed)).dump(2) << '\n';
        } else if (bnd->parsed()) {
            pf.p.validate();
            write_json(os, combined_security(n, f, pf.p));
        } else if (gam->parsed()) {
            write_json(os, gamma_distribution(gp));
        } else if (swp->parsed()) {
            SweepOptions so;
            so.axis = *axis_from_name(axis);
            so.grid = parse_grid(grid);
            so.n = n;
            so.f = f;
            so.s = s;
            so.optimize = oo;
            if (fixed) {
                pf.p.validate();
                so.fixed = pf.p;
            }
            write_csv(os, sweep(so));
        } else if (opt->parsed()) {
            auto r = optimize_params(n, f, s, oo);
            write_json(os, r.report);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
