// Config-driven entry point: build spaces, run transport and flow solves,
// execute verification suites and rigidity demos, emit reports.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kconv/calculus.hpp"
#include "kconv/config.hpp"
#include "kconv/flow.hpp"
#include "kconv/hopflax.hpp"
#include "kconv/report.hpp"
#include "kconv/space.hpp"
#include "kconv/transport.hpp"
#include "kconv/verify.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using Clock = std::chrono::steady_clock;

struct Emitter {
    std::string out_dir;
    std::vector<std::pair<std::string, double>> stage_ms;
    std::string config_hash = "0";

    bool active() const { return !out_dir.empty(); }

    void write(const std::string& name, const std::string& content) const {
        if (!active()) return;
        std::filesystem::create_directories(out_dir);
        const std::string path = out_dir + "/" + name;
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write output file: " + path);
        out << content;
    }

    void manifest() const {
        if (!active()) return;
        std::ostringstream os;
        os << "{\n  \"version\": \"" << kVersion << "\",\n  \"config_hash\": \"" << config_hash
           << "\",\n  \"stages_ms\": {";
        for (std::size_t i = 0; i < stage_ms.size(); ++i) {
            if (i) os << ", ";
            os << "\"" << stage_ms[i].first << "\": " << kconv::format_float(stage_ms[i].second);
        }
        os << "}\n}\n";
        write("manifest.json", os.str());
    }
};

std::string fnv1a_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "0";
    std::uint64_t h = 1469598103934665603ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

struct Timer {
    Emitter& emitter;
    std::string name;
    Clock::time_point start = Clock::now();
    Timer(Emitter& e, std::string n) : emitter(e), name(std::move(n)) {}
    ~Timer() {
        const double ms =
            std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start).count() / 1000.0;
        emitter.stage_ms.emplace_back(name, ms);
    }
};

int run_space_validate(const std::string& config_path, Emitter& emitter) {
    Timer t(emitter, "validate");
    const auto doc = kconv::load_config(config_path);
    const auto space = kconv::space_from_config(doc);
    const auto report = kconv::validate_metric(space);
    std::ostringstream os;
    os << "{\n  \"ok\": " << (report.ok() ? "true" : "false") << ",\n  \"violations\": [";
    for (std::size_t i = 0; i < report.violations.size(); ++i) {
        if (i) os << ",";
        os << "\n    \"" << report.violations[i].describe() << "\"";
    }
    os << "\n  ]\n}\n";
    emitter.write("validation.json", os.str());
    if (report.ok()) {
        std::cout << "space: " << space.size() << " points, metric valid\n";
        return 0;
    }
    for (const auto& v : report.violations) std::cout << "violation: " << v.describe() << "\n";
    return 2;
}

int run_transport(const std::string& config_path, const std::string& method, double epsilon,
                  bool dump_plan, Emitter& emitter) {
    Timer t(emitter, "transport");
    const auto doc = kconv::load_config(config_path);
    const auto space = kconv::space_from_config(doc);
    const auto mu = kconv::density_from_config(space, doc.at("mu"));
    const auto nu = kconv::density_from_config(space, doc.at("nu"));
    kconv::TransportOptions opts;
    if (epsilon > 0.0) opts.epsilon = epsilon;
    const auto sol = kconv::w2(space, mu, nu,
                               method == "entropic" ? kconv::TransportMethod::entropic
                                                    : kconv::TransportMethod::exact_lp,
                               opts);
    std::ostringstream os;
    os << "{\n  \"w2\": " << kconv::format_float(sol.w2) << ",\n  \"method\": \""
       << (sol.method == kconv::TransportMethod::exact_lp ? "exact_lp" : "entropic")
       << "\",\n  \"gap\": " << kconv::format_float(sol.gap) << ",\n  \"iters\": " << sol.iterations
       << "\n}\n";
    emitter.write("transport.json", os.str());
    if (dump_plan) {
        std::ostringstream plan;
        for (const auto& e : sol.plan)
            plan << e.i << "," << e.j << "," << kconv::format_float(e.mass) << "\n";
        emitter.write("plan.csv", plan.str());
    }
    std::cout << "w2 = " << kconv::format_float(sol.w2) << " (gap " << kconv::format_float(sol.gap)
              << ")\n";
    return 0;
}

int run_hopflax(const std::string& config_path, double time, Emitter& emitter) {
    Timer t(emitter, "hopflax");
    const auto doc = kconv::load_config(config_path);
    const auto space = kconv::space_from_config(doc);
    const auto u = kconv::potential_from_config(space, doc);
    const auto q = kconv::hopf_lax(space, u, time);
    std::ostringstream os;
    for (int i = 0; i < q.size(); ++i) os << kconv::format_float(q[i]) << "\n";
    emitter.write("hopflax.csv", os.str());
    double lo = q[0], hi = q[0];
    for (int i = 0; i < q.size(); ++i) {
        lo = std::min(lo, q[i]);
        hi = std::max(hi, q[i]);
    }
    std::cout << "Q_" << time << ": min " << kconv::format_float(lo) << ", max "
              << kconv::format_float(hi) << "\n";
    return 0;
}

kconv::VectorField field_from_config(const kconv::MetricMeasureSpace& space,
                                     const nlohmann::json& doc) {
    const auto& f = doc.at("field");
    const std::string kind = f.at("kind").get<std::string>();
    if (kind == "neg_grad") {
        const auto u = kconv::potential_from_config(space, doc);
        auto g = kconv::gradient(space, u);
        std::vector<double> c(g.raw());
        for (double& x : c) x = -x;
        return kconv::VectorField::grid_field(space, std::move(c));
    }
    if (kind == "constant") {
        std::vector<double> value;
        for (const auto& v : f.at("value")) value.push_back(v.get<double>());
        std::vector<double> c(static_cast<std::size_t>(space.size()) * space.dim());
        for (int i = 0; i < space.size(); ++i)
            for (int a = 0; a < space.dim(); ++a)
                c[static_cast<std::size_t>(i) * space.dim() + a] = value.at(a);
        return kconv::VectorField::grid_field(space, std::move(c));
    }
    if (kind == "csv") {
        auto values = kconv::read_csv_values(f.at("path").get<std::string>());
        return kconv::VectorField::grid_field(space, std::move(values));
    }
    throw std::runtime_error("config: unknown field kind '" + kind + "'");
}

int run_flow(const std::string& config_path, Emitter& emitter) {
    Timer t(emitter, "flow");
    const auto doc = kconv::load_config(config_path);
    const auto space = kconv::space_from_config(doc);
    const auto field = field_from_config(space, doc);
    const auto mu0 = kconv::density_from_config(space, doc.at("mu0"));
    const auto& f = doc.at("flow");
    const double T = f.at("T").get<double>();
    const double dt = f.at("dt").get<double>();
    const int stride = f.value("stride", 10);
    const std::string solver = f.value("solver", "lagrangian");

    kconv::FlowTrajectory traj;
    if (solver == "eulerian") {
        traj = kconv::solve_continuity(space, field, mu0, T, dt, stride);
        for (std::size_t s = 0; s < traj.densities.size(); ++s) {
            std::ostringstream name;
            name << "density_" << s << ".csv";
            std::ostringstream os;
            for (double v : traj.densities[s]) os << kconv::format_float(v) << "\n";
            emitter.write(name.str(), os.str());
        }
    } else {
        const auto particles = kconv::ensemble_from_density(space, mu0, "config:mu0");
        traj = kconv::lagrangian_flow(space, field, particles, T, dt, stride);
        for (std::size_t s = 0; s < traj.particles.size(); ++s) {
            std::ostringstream name;
            name << "particles_" << s << ".csv";
            std::ostringstream os;
            const auto& pe = traj.particles[s];
            for (int k = 0; k < pe.count(); ++k) {
                for (int a = 0; a < pe.dim; ++a) os << kconv::format_float(pe.position(k)[a]) << ",";
                os << kconv::format_float(pe.masses[k]) << "\n";
            }
            emitter.write(name.str(), os.str());
        }
        const auto diag = kconv::flow_diagnostics(space, traj, field);
        std::ostringstream os;
        os << "{\n  \"speed_defect\": " << kconv::format_float(diag.speed_defect)
           << ",\n  \"semigroup_defect\": " << kconv::format_float(diag.semigroup_defect)
           << ",\n  \"max_compression\": " << kconv::format_float(diag.max_compression) << "\n}\n";
        emitter.write("diagnostics.json", os.str());
    }
    std::ostringstream os;
    os << "{\n  \"times\": [";
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        os << (i ? ", " : "") << kconv::format_float(traj.times[i]);
    os << "],\n  \"dt\": " << kconv::format_float(traj.dt) << ",\n  \"stride\": " << traj.stride
       << ",\n  \"clamp_events\": " << traj.clamp_events << "\n}\n";
    emitter.write("trajectory.json", os.str());
    std::cout << "flow: " << traj.times.size() << " snapshots, clamp events " << traj.clamp_events
              << "\n";
    return 0;
}

int run_verify(const std::string& config_path, double k_override, bool has_k, double tol_scale,
               Emitter& emitter) {
    Timer t(emitter, "verify");
    const auto doc = kconv::load_config(config_path);
    const auto space = kconv::space_from_config(doc);
    const auto u = kconv::potential_from_config(space, doc);
    auto scenario = kconv::scenario_from_config(doc);
    scenario.tol_scale *= tol_scale;
    std::vector<double> ks = kconv::k_values_from_config(doc);
    if (has_k) ks = {k_override};
    if (ks.empty()) throw std::runtime_error("verify: no K value (config scenario.K or --K)");

    std::vector<kconv::VerificationReport> all;
    bool ok = true;
    for (double K : ks) {
        const auto suite = kconv::run_equivalence_suite(space, u, K, scenario);
        for (const auto& r : suite.reports) {
            std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.check_id << " K=" << K
                      << " margin=" << kconv::format_float(r.margin) << "\n";
            ok = ok && r.pass;
            all.push_back(r);
            if (r.check_id == "4-w2-contraction") {
                std::ostringstream name;
                name << "contraction_K" << K << ".csv";
                emitter.write(name.str(), kconv::contraction_plot_csv(r));
            }
        }
        std::cout << "suite K=" << K << ": " << (suite.coherent ? "coherent" : "mixed") << " verdict\n";
    }
    emitter.write("report.json", kconv::reports_to_json(all));
    emitter.write("report.csv", kconv::reports_to_csv(all));
    return ok ? 0 : 2;
}

int run_demo(const std::string& mode, unsigned seed, Emitter& emitter) {
    Timer t(emitter, "demo");
    const auto space = kconv::MetricMeasureSpace::grid(2, {{-1.0, 1.0}, {-1.0, 1.0}}, 0.05);
    const auto report = kconv::demo_rigidity(
        space, mode == "cone" ? kconv::RigidityMode::cone : kconv::RigidityMode::splitting, seed);
    emitter.write("demo_" + mode + ".json", kconv::rigidity_to_json(report));
    for (const auto& c : report.checks)
        std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << " worst="
                  << kconv::format_float(c.worst) << " tol=" << kconv::format_float(c.tolerance)
                  << "\n";
    if (!report.note.empty()) std::cout << "note: " << report.note << "\n";
    return report.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical checks for K-convex potentials and K-monotone fields on discrete "
                 "metric measure spaces"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::string method = "exact";
    double epsilon = 0.0;
    double k_value = 0.0;
    double tol_scale = 1.0;
    double hl_time = 0.5;
    unsigned seed = 20240;
    bool dump_plan = false;

    auto* space_cmd = app.add_subcommand("space", "space utilities");
    auto* space_validate = space_cmd->add_subcommand("validate", "check metric axioms and weights");
    space_validate->add_option("--config", config_path, "config file")->required();
    space_validate->add_option("--out", out_dir, "output directory");

    auto* transport_cmd = app.add_subcommand("transport", "optimal transport solves");
    auto* transport_w2 = transport_cmd->add_subcommand("w2", "W2 between two measures");
    transport_w2->add_option("--config", config_path, "config file")->required();
    transport_w2->add_option("--method", method, "exact|entropic");
    transport_w2->add_option("--epsilon", epsilon, "entropic regularization");
    transport_w2->add_flag("--plan", dump_plan, "dump the optimal plan CSV");
    transport_w2->add_option("--out", out_dir, "output directory");

    auto* hopflax_cmd = app.add_subcommand("hopflax", "Hopf-Lax semigroup");
    auto* hopflax_eval = hopflax_cmd->add_subcommand("eval", "evaluate Q_t of the config potential");
    hopflax_eval->add_option("--config", config_path, "config file")->required();
    hopflax_eval->add_option("--t", hl_time, "semigroup time");
    hopflax_eval->add_option("--out", out_dir, "output directory");

    auto* flow_cmd = app.add_subcommand("flow", "flow solves");
    auto* flow_run = flow_cmd->add_subcommand("run", "integrate a flow from a config");
    flow_run->add_option("--config", config_path, "config file")->required();
    flow_run->add_option("--out", out_dir, "output directory");

    auto* verify_cmd = app.add_subcommand("verify", "run the equivalence suite");
    verify_cmd->add_option("--config", config_path, "scenario config")->required();
    auto* k_opt = verify_cmd->add_option("--K", k_value, "override the modulus K");
    verify_cmd->add_option("--tol-scale", tol_scale, "scale all tolerances");
    verify_cmd->add_option("--out", out_dir, "output directory");

    auto* demo_cmd = app.add_subcommand("demo", "rigidity demos");
    std::string demo_mode;
    demo_cmd->add_option("mode", demo_mode, "splitting|cone")
        ->required()
        ->check(CLI::IsMember({"splitting", "cone"}));
    demo_cmd->add_option("--seed", seed, "rng seed for point pairs");
    demo_cmd->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    Emitter emitter;
    emitter.out_dir = out_dir;
    if (!config_path.empty()) emitter.config_hash = fnv1a_hash(config_path);

    try {
        int rc = 1;
        if (space_validate->parsed()) rc = run_space_validate(config_path, emitter);
        else if (transport_w2->parsed()) rc = run_transport(config_path, method, epsilon, dump_plan, emitter);
        else if (hopflax_eval->parsed()) rc = run_hopflax(config_path, hl_time, emitter);
        else if (flow_run->parsed()) rc = run_flow(config_path, emitter);
        else if (verify_cmd->parsed()) rc = run_verify(config_path, k_value, !k_opt->empty(), tol_scale, emitter);
        else if (demo_cmd->parsed()) rc = run_demo(demo_mode, seed, emitter);
        emitter.manifest();
        return rc;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
