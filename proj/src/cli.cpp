#include "aoi/cli.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "aoi/optimizer.hpp"

namespace aoi::cli {

using json = nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int parse_int(std::string_view text, std::string_view what) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw UsageError("invalid " + std::string(what) + ": '" + std::string(text) + "'");
    return v;
}

double parse_double(std::string_view text) {
    // from_chars for double is unavailable on older libstdc++; strtod on a copy.
    std::string s(text);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw UsageError("invalid number: '" + s + "'");
    return v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string objective_name(ObjectiveKind k) {
    return k == ObjectiveKind::Total ? "total" : "normalized";
}

std::string solver_name(Solver s) {
    switch (s) {
        case Solver::Pgd: return "pgd";
        case Solver::FixedPoint: return "fixed-point";
        case Solver::DRegular: return "d-regular";
        case Solver::Star: return "star";
        case Solver::GridOracle: return "grid-oracle";
    }
    return "?";
}

json number(double x) {
    // Non-finite values become null; nlohmann would do the same silently.
    return std::isfinite(x) ? json(x) : json(nullptr);
}

json vector_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (double x : v) arr.push_back(number(x));
    return arr;
}

json topology_json(const Topology& t) {
    json edges = json::array();
    for (const auto& [u, v] : t.edges()) edges.push_back({u, v});
    return {{"n", t.size()}, {"edges", edges}};
}

// A flat table rendered either as CSV (header + rows) or as a JSON array of objects.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;  // preformatted cells
    std::vector<std::vector<json>> values;

    void add(std::vector<std::pair<std::string, json>> cells) {
        std::vector<std::string> row;
        std::vector<json> vals;
        for (auto& [text, val] : cells) {
            row.push_back(std::move(text));
            vals.push_back(std::move(val));
        }
        rows.push_back(std::move(row));
        values.push_back(std::move(vals));
    }

    std::string csv() const {
        std::ostringstream os;
        for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
        os << '\n';
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
            os << '\n';
        }
        return os.str();
    }

    json as_json() const {
        json arr = json::array();
        for (const auto& vals : values) {
            json obj = json::object();
            for (std::size_t c = 0; c < columns.size(); ++c) obj[columns[c]] = vals[c];
            arr.push_back(std::move(obj));
        }
        return arr;
    }
};

std::pair<std::string, json> num_cell(double x) { return {format_number(x), number(x)}; }
std::pair<std::string, json> int_cell(long long x) { return {std::to_string(x), json(x)}; }
std::pair<std::string, json> str_cell(const std::string& s) { return {s, json(s)}; }
std::pair<std::string, json> empty_cell() { return {"", json(nullptr)}; }

double relative_error(double estimate, double truth) {
    if (std::isinf(truth)) return std::isinf(estimate) ? 0.0 : kInf;
    if (truth == 0.0) return estimate == 0.0 ? 0.0 : kInf;
    return std::abs(estimate - truth) / std::abs(truth);
}

bool all_equal(const Eigen::VectorXd& v, double x) { return (v.array() == x).all(); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Solved {
    Eigen::VectorXd q;
    SolveResult result;
};

Solved run_solver(const Topology& t, const Eigen::VectorXd& p, const RunSpec& spec) {
    SolveResult r;
    switch (spec.solver) {
        case Solver::Pgd: r = solve_projected_gradient(t, p, spec.objective); break;
        case Solver::FixedPoint: r = solve_fixed_point(t, p, spec.objective); break;
        case Solver::DRegular: {
            const int d = t.degree(0);
            if (d < 1 || !t.is_regular(d))
                throw UsageError("solver d-regular needs a d-regular topology with d >= 1");
            if (!all_equal(p, p[0]) || p[0] <= 0.0)
                throw UsageError("solver d-regular needs a homogeneous p > 0");
            r.q_star = Eigen::VectorXd::Constant(t.size(), d_regular_closed_form(d, p[0]));
            r.converged = true;
            break;
        }
        case Solver::Star: {
            if (t.size() < 2 || !(t == make_star(t.size())))
                throw UsageError("solver star needs a star topology (preset star:N)");
            if (!all_equal(p, 1.0)) throw UsageError("solver star assumes p = 1 at every node");
            if (spec.objective != ObjectiveKind::Total)
                throw UsageError("solver star applies to the total objective only");
            const auto s = star_solve(t.size());
            r.q_star = Eigen::VectorXd::Constant(t.size(), s.leaf);
            r.q_star[0] = s.hub;
            r.converged = true;
            break;
        }
        case Solver::GridOracle: {
            const auto g = brute_force_grid(t, p, spec.objective, spec.resolution);
            r.q_star = g.q_best;
            r.converged = true;
            break;
        }
    }
    if (spec.solver == Solver::DRegular || spec.solver == Solver::Star || spec.solver == Solver::GridOracle) {
        const double eps = SolveOptions{}.epsilon_lo;
        r.objective_value = objective(t, NetworkParamsd{p, r.q_star}, spec.objective);
        if (std::isfinite(r.objective_value)) {
            r.grad_residual = projected_gradient_norm(t, p, r.q_star, spec.objective, eps);
            r.fp_residual = fixed_point_residual(t, p, r.q_star, spec.objective, eps);
        } else {
            r.grad_residual = r.fp_residual = kInf;
        }
    }
    return {r.q_star, std::move(r)};
}

struct LinkComparison {
    DirectedLink link;
    std::int64_t deliveries;
    double empirical_aoi, mu_hat, analytic_mu, analytic_aoi, aoi_err, mu_err;
};

std::vector<LinkComparison> compare_links(const Topology& t, const NetworkParamsd& params,
                                          const sim::SimResult& sr) {
    const auto metrics = link_metrics(t, params);
    std::vector<LinkComparison> out;
    for (std::size_t l = 0; l < metrics.size(); ++l) {
        const auto& m = metrics[l];
        const auto& s = sr.links[l];
        const double mu_hat = sim::estimate_mu(sr, m.link);
        out.push_back({m.link, s.deliveries, s.mean_age, mu_hat, m.mu, m.aoi,
                       relative_error(s.mean_age, m.aoi), relative_error(mu_hat, m.mu)});
    }
    return out;
}

Table comparison_table(const std::vector<LinkComparison>& rows, bool with_pass, double tol) {
    Table tab;
    tab.columns = {"receiver",    "sender",       "deliveries",    "empirical_aoi", "mu_hat",
                   "analytic_mu", "analytic_aoi", "aoi_rel_error", "mu_rel_error"};
    if (with_pass) tab.columns.push_back("pass");
    for (const auto& r : rows) {
        std::vector<std::pair<std::string, json>> cells{
            int_cell(r.link.receiver), int_cell(r.link.sender), int_cell(r.deliveries),
            num_cell(r.empirical_aoi), num_cell(r.mu_hat),      num_cell(r.analytic_mu),
            num_cell(r.analytic_aoi),  num_cell(r.aoi_err),     num_cell(r.mu_err)};
        if (with_pass) {
            const bool ok = r.aoi_err <= tol && r.mu_err <= tol;
            cells.push_back({ok ? "1" : "0", json(ok)});
        }
        tab.add(std::move(cells));
    }
    return tab;
}

json sim_json(const sim::SimConfig& cfg, const sim::SimResult& sr) {
    return {{"slots", cfg.slots},
            {"warmup", cfg.warmup},
            {"replications", cfg.replications},
            {"seed", cfg.seed},
            {"slots_measured", sr.slots_measured}};
}

std::string render(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), ptr);
}

Topology parse_topology_spec(std::string_view spec) {
    spec = trim(spec);
    if (spec == "tree6") return make_tree6();
    if (spec == "astar6") return make_asym_star6();
    if (spec == "acircle6") return make_asym_circle6();
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) throw UsageError("unknown topology '" + std::string(spec) + "'");
    const auto name = spec.substr(0, colon);
    const auto arg = spec.substr(colon + 1);
    try {
        if (name == "grid") {
            const auto x = arg.find('x');
            if (x == std::string_view::npos) throw UsageError("grid expects RxC, e.g. grid:2x3");
            return make_grid(parse_int(arg.substr(0, x), "rows"), parse_int(arg.substr(x + 1), "cols"));
        }
        const int n = parse_int(arg, "size");
        if (name == "line") return make_line(n);
        if (name == "ring") return make_ring(n);
        if (name == "star") return make_star(n);
        if (name == "complete") return make_complete(n);
    } catch (const TopologyError& e) {
        throw UsageError(e.what());
    }
    throw UsageError("unknown topology '" + std::string(name) + "'");
}

Topology load_topology(const RunSpec& spec) {
    const bool has_preset = !spec.topology.empty();
    const bool has_file = !spec.edges_file.empty();
    if (has_preset == has_file) throw UsageError("give exactly one of --topology or --edges");
    if (has_preset) return parse_topology_spec(spec.topology);
    try {
        return parse_edge_list(read_file(spec.edges_file));
    } catch (const ParseError& e) {
        throw UsageError(spec.edges_file + ": " + e.what());
    }
}

Eigen::VectorXd parse_probabilities(std::string_view text, int n) {
    std::vector<double> vals;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find(',', start);
        if (end == std::string_view::npos) end = text.size();
        vals.push_back(parse_double(trim(text.substr(start, end - start))));
        start = end + 1;
    }
    for (double v : vals)
        if (!(v >= 0.0 && v <= 1.0)) throw UsageError("probabilities must lie in [0, 1]");
    if (vals.size() == 1) return Eigen::VectorXd::Constant(n, vals[0]);
    if (static_cast<int>(vals.size()) != n)
        throw UsageError("expected 1 or " + std::to_string(n) + " probabilities, got " +
                         std::to_string(vals.size()));
    return Eigen::Map<Eigen::VectorXd>(vals.data(), n);
}

std::pair<int, int> parse_range(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw UsageError("range expects A:B");
    const int a = parse_int(text.substr(0, colon), "range start");
    const int b = parse_int(text.substr(colon + 1), "range end");
    if (a > b) throw UsageError("range start exceeds end");
    return {a, b};
}

Solver parse_solver(std::string_view name) {
    for (auto s : {Solver::Pgd, Solver::FixedPoint, Solver::DRegular, Solver::Star, Solver::GridOracle})
        if (solver_name(s) == name) return s;
    throw UsageError("unknown solver '" + std::string(name) + "'");
}

ObjectiveKind parse_objective(std::string_view name) {
    if (name == "total") return ObjectiveKind::Total;
    if (name == "normalized") return ObjectiveKind::NeighborNormalized;
    throw UsageError("unknown objective '" + std::string(name) + "'");
}

SweepKind parse_sweep(std::string_view name) {
    if (name == "line") return SweepKind::Line;
    if (name == "star") return SweepKind::Star;
    if (name == "presets") return SweepKind::Presets;
    throw UsageError("unknown sweep '" + std::string(name) + "'");
}

Format parse_format(std::string_view name) {
    if (name == "json") return Format::Json;
    if (name == "csv") return Format::Csv;
    if (name == "edges") return Format::EdgeList;
    throw UsageError("unknown format '" + std::string(name) + "'");
}

Report cmd_gen(const RunSpec& spec) {
    const auto t = load_topology(spec);
    switch (spec.format) {
        case Format::Json: return {render(topology_json(t))};
        case Format::Csv: {
            Table tab;
            tab.columns = {"u", "v"};
            for (const auto& [u, v] : t.edges()) tab.add({int_cell(u), int_cell(v)});
            return {tab.csv()};
        }
        case Format::EdgeList: return {to_edge_list(t)};
    }
    return {};
}

Report cmd_solve(const RunSpec& spec) {
    const auto t = load_topology(spec);
    const auto p = parse_probabilities(spec.p, t.size());
    const auto solved = run_solver(t, p, spec);
    const auto& r = solved.result;
    const auto metrics = link_metrics(t, NetworkParamsd{p, solved.q});

    if (spec.format == Format::Csv) {
        Table tab;
        tab.columns = {"record", "node", "peer", "value"};
        for (int i = 0; i < t.size(); ++i) tab.add({str_cell("q_star"), int_cell(i), empty_cell(), num_cell(solved.q[i])});
        for (const auto& m : metrics)
            tab.add({str_cell("mu"), int_cell(m.link.receiver), int_cell(m.link.sender), num_cell(m.mu)});
        for (const auto& m : metrics)
            tab.add({str_cell("aoi"), int_cell(m.link.receiver), int_cell(m.link.sender), num_cell(m.aoi)});
        tab.add({str_cell("objective"), empty_cell(), empty_cell(), num_cell(r.objective_value)});
        tab.add({str_cell("grad_residual"), empty_cell(), empty_cell(), num_cell(r.grad_residual)});
        tab.add({str_cell("fp_residual"), empty_cell(), empty_cell(), num_cell(r.fp_residual)});
        tab.add({str_cell("iterations"), empty_cell(), empty_cell(), int_cell(r.iterations)});
        tab.add({str_cell("converged"), empty_cell(), empty_cell(), int_cell(r.converged ? 1 : 0)});
        return {tab.csv()};
    }
    if (spec.format != Format::Json) throw UsageError("solve supports --format json|csv");

    json per_link = json::array();
    for (const auto& m : metrics)
        per_link.push_back({{"receiver", m.link.receiver},
                            {"sender", m.link.sender},
                            {"mu", number(m.mu)},
                            {"aoi", number(m.aoi)}});
    json doc = {{"command", "solve"},
                {"topology", topology_json(t)},
                {"p", vector_json(p)},
                {"objective_kind", objective_name(spec.objective)},
                {"solver", solver_name(spec.solver)},
                {"q_star", vector_json(solved.q)},
                {"objective", number(r.objective_value)},
                {"objective_per_node", number(r.objective_value / t.size())},
                {"per_link", per_link},
                {"residuals", {{"grad", number(r.grad_residual)}, {"fp", number(r.fp_residual)}}},
                {"iterations", r.iterations},
                {"converged", r.converged}};
    return {render(doc)};
}

Report cmd_simulate(const RunSpec& spec) {
    const auto t = load_topology(spec);
    const auto p = parse_probabilities(spec.p, t.size());
    Eigen::VectorXd q;
    if (!spec.q.empty() && !spec.q_file.empty()) throw UsageError("give only one of --q or --q-file");
    if (!spec.q.empty()) {
        q = parse_probabilities(spec.q, t.size());
    } else if (!spec.q_file.empty()) {
        const auto doc = json::parse(read_file(spec.q_file), nullptr, false);
        if (doc.is_discarded()) throw UsageError(spec.q_file + ": not valid JSON");
        const auto& arr = doc.contains("q_star") ? doc["q_star"] : doc.value("q", json());
        if (!arr.is_array() || static_cast<int>(arr.size()) != t.size())
            throw UsageError(spec.q_file + ": expected a q_star (or q) array of length " + std::to_string(t.size()));
        q.resize(t.size());
        for (int i = 0; i < t.size(); ++i) q[i] = arr[i].get<double>();
    } else {
        throw UsageError("simulate needs --q or --q-file");
    }
    try {
        spec.sim.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const NetworkParamsd params{p, q};
    const auto sr = sim::run(t, params, spec.sim);
    const auto rows = compare_links(t, params, sr);
    const auto tab = comparison_table(rows, false, spec.tol);
    if (spec.format == Format::Csv) return {tab.csv()};
    if (spec.format != Format::Json) throw UsageError("simulate supports --format json|csv");
    json doc = {{"command", "simulate"},
                {"topology", topology_json(t)},
                {"p", vector_json(p)},
                {"q", vector_json(q)},
                {"sim", sim_json(spec.sim, sr)},
                {"per_link", tab.as_json()}};
    return {render(doc)};
}

Report cmd_compare(const RunSpec& spec) {
    const auto t = load_topology(spec);
    const auto p = parse_probabilities(spec.p, t.size());
    try {
        spec.sim.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto solved = run_solver(t, p, spec);
    const NetworkParamsd params{p, solved.q};
    const auto sr = sim::run(t, params, spec.sim);
    const auto rows = compare_links(t, params, sr);
    bool pass = true;
    for (const auto& r : rows) pass = pass && r.aoi_err <= spec.tol && r.mu_err <= spec.tol;
    const auto tab = comparison_table(rows, true, spec.tol);
    const int code = pass ? 0 : 1;
    if (spec.format == Format::Csv) return {tab.csv(), code};
    if (spec.format != Format::Json) throw UsageError("compare supports --format json|csv");
    json doc = {{"command", "compare"},
                {"topology", topology_json(t)},
                {"p", vector_json(p)},
                {"objective_kind", objective_name(spec.objective)},
                {"solver", solver_name(spec.solver)},
                {"q_star", vector_json(solved.q)},
                {"objective", number(solved.result.objective_value)},
                {"sim", sim_json(spec.sim, sr)},
                {"tolerance", spec.tol},
                {"pass", pass},
                {"per_link", tab.as_json()}};
    return {render(doc), code};
}

Report cmd_sweep(const RunSpec& spec) {
    if (spec.n_min > spec.n_max) throw UsageError("range start exceeds end");
    Table tab;
    auto homogeneous_p = [&](int n) {
        auto p = parse_probabilities(spec.p, n);
        if (!all_equal(p, p[0])) throw UsageError("sweeps need a scalar --p");
        return p;
    };
    auto general = [&](const Topology& t, const Eigen::VectorXd& p, ObjectiveKind kind) {
        RunSpec s = spec;
        s.objective = kind;
        if (s.solver != Solver::FixedPoint) s.solver = Solver::Pgd;
        return run_solver(t, p, s);
    };

    switch (spec.sweep) {
        case SweepKind::Line: {
            if (spec.n_min < 2) throw UsageError("line sweep needs N >= 2");
            tab.columns = {"n", "closed_form_q", "closed_form_aoi_per_node", "optimal_aoi_per_node",
                           "relative_gap", "q_end", "q_center"};
            for (int n = spec.n_min; n <= spec.n_max; ++n) {
                const auto t = make_line(n);
                const auto p = homogeneous_p(n);
                const double qc = d_regular_closed_form(2, p[0]);
                const double f_closed =
                    objective(t, NetworkParamsd{p, Eigen::VectorXd::Constant(n, qc)}, ObjectiveKind::Total);
                const auto opt = general(t, p, ObjectiveKind::Total);
                const double f_opt = opt.result.objective_value;
                tab.add({int_cell(n), num_cell(qc), num_cell(f_closed / n), num_cell(f_opt / n),
                         num_cell((f_closed - f_opt) / f_opt), num_cell(opt.q[0]), num_cell(opt.q[n / 2])});
            }
            break;
        }
        case SweepKind::Star: {
            if (spec.n_min < 2) throw UsageError("star sweep needs N >= 2");
            tab.columns = {"n", "q1_total", "q2_total", "q1_normalized", "q2_normalized"};
            for (int n = spec.n_min; n <= spec.n_max; ++n) {
                const auto t = make_star(n);
                const auto p = homogeneous_p(n);
                double q1 = 0.0, q2 = 0.0;
                if (p[0] == 1.0) {
                    const auto s = star_solve(n);
                    q1 = s.hub;
                    q2 = s.leaf;
                } else {
                    const auto tot = general(t, p, ObjectiveKind::Total);
                    q1 = tot.q[0];
                    q2 = tot.q[1];
                }
                const auto norm = general(t, p, ObjectiveKind::NeighborNormalized);
                tab.add({int_cell(n), num_cell(q1), num_cell(q2), num_cell(norm.q[0]), num_cell(norm.q[1])});
            }
            break;
        }
        case SweepKind::Presets: {
            tab.columns = {"topology", "n", "edges", "mean_degree", "normalized_aoi", "aoi_per_node"};
            const std::vector<std::pair<std::string, Topology>> presets{{"tree6", make_tree6()},
                                                                        {"grid:2x3", make_grid(2, 3)},
                                                                        {"astar6", make_asym_star6()},
                                                                        {"acircle6", make_asym_circle6()}};
            for (const auto& [name, t] : presets) {
                const auto p = homogeneous_p(t.size());
                const auto norm = general(t, p, ObjectiveKind::NeighborNormalized);
                const auto tot = general(t, p, ObjectiveKind::Total);
                const double mean_degree = 2.0 * static_cast<double>(t.edges().size()) / t.size();
                tab.add({str_cell(name), int_cell(t.size()), int_cell(static_cast<long long>(t.edges().size())),
                         num_cell(mean_degree), num_cell(norm.result.objective_value),
                         num_cell(tot.result.objective_value / t.size())});
            }
            break;
        }
    }
    if (spec.format == Format::Json) return {render(tab.as_json())};
    if (spec.format == Format::Csv) return {tab.csv()};
    throw UsageError("sweep supports --format csv|json");
}

Report execute(const RunSpec& spec) {
    Report rep;
    switch (spec.command) {
        case Command::Gen: rep = cmd_gen(spec); break;
        case Command::Solve: rep = cmd_solve(spec); break;
        case Command::Simulate: rep = cmd_simulate(spec); break;
        case Command::Sweep: rep = cmd_sweep(spec); break;
        case Command::Compare: rep = cmd_compare(spec); break;
    }
    if (!spec.out.empty()) {
        std::ofstream os(spec.out, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write '" + spec.out + "'");
        os << rep.text;
    }
    return rep;
}

}  // namespace aoi::cli
