#include "fbdp/cli.hpp"

#include "fbdp/dualpair.hpp"
#include "fbdp/euler.hpp"
#include "fbdp/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>

namespace fbdp {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct GlobalOpts {
    double tol = 0.0; // 0 means "use each check's default"
    std::uint64_t seed = 42;
    std::string out_dir = ".";
    bool quiet = false;
};

std::string out_path(const GlobalOpts& g, const std::string& name) {
    fs::path p(name);
    if (p.is_absolute())
        return name;
    fs::create_directories(g.out_dir);
    return (fs::path(g.out_dir) / p).string();
}

void say(const GlobalOpts& g, const std::string& line) {
    if (!g.quiet)
        std::cout << line << "\n";
}

struct MeshGenArgs {
    std::string shape;
    int n = 1, nr = 4, na = 16;
    double side = 1.0, radius = 1.0, rin = 0.5, rout = 1.0;
    std::string out = "mesh.json";
};

int cmd_mesh_gen(const MeshGenArgs& a, const GlobalOpts& g) {
    Mesh mesh;
    if (a.shape == "square")
        mesh = build_square(a.n, a.side);
    else if (a.shape == "disk")
        mesh = build_disk(a.nr, a.na, a.radius);
    else if (a.shape == "annulus")
        mesh = build_annulus(a.nr, a.na, a.rin, a.rout);
    else
        throw SchemaError("unknown shape \"" + a.shape + "\"");
    const std::string path = out_path(g, a.out);
    save_mesh(mesh, path);
    std::ostringstream line;
    line << "mesh: vertices=" << mesh.vertices << " triangles=" << mesh.triangle_count()
         << " boundary_loops=" << mesh.boundary_loops.size()
         << " total_area=" << format_double(total_ref_area(mesh)) << " -> " << path;
    say(g, line.str());
    return 0;
}

struct VerifyArgs {
    std::string mesh_path; // empty: built-in unit square fixture
    std::string suite = "weak";
    std::string family = "poly";
    int degree = 2;
    int points = 3;
    int w_count = 0; // 0: max(5, admissible dimension)
    std::string h = "coord-x";
};

// Placeholder report so witness runs share the CSV layout; -1 marks
// dimensions the witness suite does not compute.
DualPairReport witness_row(const WitnessReport& w, double tol) {
    DualPairReport rep;
    rep.label = "witness";
    rep.dim_tangent = rep.dim_radical = rep.dim_arena = -1;
    rep.dim_left_span = rep.dim_right_span = -1;
    rep.dim_ker_left = rep.dim_ker_right = -1;
    rep.dim_left_orth = rep.dim_right_orth = -1;
    rep.defect_dim = 0;
    rep.checks.push_back({"witness_right_map", w.right_map_residual, tol, w.pass});
    rep.pass = w.pass;
    return rep;
}

int cmd_verify(const VerifyArgs& a, const GlobalOpts& g) {
    MeshPtr mesh;
    std::string mesh_label;
    if (a.mesh_path.empty()) {
        mesh = std::make_shared<Mesh>(build_square(1, 1.0));
        mesh_label = "square(1)";
    } else {
        mesh = std::make_shared<Mesh>(load_mesh(a.mesh_path));
        mesh_label = a.mesh_path;
    }

    Catalog cat;
    if (a.family == "poly")
        cat = make_catalog(AlgebraElementM::Family::poly, a.degree);
    else if (a.family == "trig")
        cat = make_catalog(AlgebraElementM::Family::trig, a.degree);
    else
        throw SchemaError("unknown catalog family \"" + a.family + "\"");

    const int adim = static_cast<int>(admissible_basis(*mesh).cols());
    const int count = a.w_count > 0 ? a.w_count : std::max(5, adim);
    const std::vector<AlgebraElementS> ws = w_basis(*mesh, count);

    const bool want_weak = a.suite == "weak" || a.suite == "all";
    const bool want_strong = a.suite == "strong" || a.suite == "all";
    const bool want_witness = a.suite == "witness" || a.suite == "all";
    if (!want_weak && !want_strong && !want_witness)
        throw SchemaError("unknown suite \"" + a.suite + "\" (weak|strong|witness|all)");

    const double tol_weak = g.tol > 0 ? g.tol : 1e-7;
    const double tol_strong = g.tol > 0 ? g.tol : 1e-6;
    const double tol_witness = g.tol > 0 ? g.tol : 1e-9;

    json points = json::array();
    std::ostringstream csv;
    csv << report_csv_header() << "\n";
    bool all_pass = true;
    for (int i = 0; i < a.points; ++i) {
        const std::uint64_t seed = g.seed + static_cast<std::uint64_t>(i);
        const PhasePoint z = random_phase_point(mesh, seed);
        json pt{{"seed", seed}, {"min_alpha", z.min_alpha}};
        std::vector<DualPairReport> reps;
        if (want_weak)
            reps.push_back(check_weak_dual_pair(z, cat, ws, tol_weak));
        if (want_strong)
            reps.push_back(check_strong_dual_pair(z, cat, ws, tol_strong));
        if (want_witness) {
            VecX h(mesh->vertices);
            if (a.h == "coord-x")
                h = z.emb.positions.col(0);
            else if (a.h == "coord-y")
                h = z.emb.positions.col(1);
            else
                throw SchemaError("unknown witness function \"" + a.h +
                                  "\" (coord-x|coord-y)");
            const WitnessReport w = nontransitivity_witness(z, h, cat, tol_witness);
            pt["witness"] = witness_to_json(w);
            reps.push_back(witness_row(w, tol_witness));
        }
        json jreps = json::array();
        for (const auto& r : reps) {
            jreps.push_back(report_to_json(r));
            csv << report_csv_row(i, r) << "\n";
            all_pass = all_pass && r.pass;
        }
        pt["reports"] = jreps;
        points.push_back(pt);
    }

    const json doc{{"mesh", mesh_label}, {"suite", a.suite},     {"family", a.family},
                   {"degree", a.degree}, {"seed", g.seed},       {"w_count", count},
                   {"points", points},   {"all_pass", all_pass}};
    const std::string jpath = out_path(g, "verify_report.json");
    const std::string cpath = out_path(g, "verify_summary.csv");
    write_json_file(jpath, doc);
    write_text_file(cpath, csv.str());
    std::ostringstream line;
    line << "verify: mesh=" << mesh_label << " suite=" << a.suite << " points=" << a.points
         << " result=" << (all_pass ? "pass" : "FAIL") << " -> " << jpath;
    say(g, line.str());
    return all_pass ? 0 : 1;
}

struct SimulateArgs {
    std::string config;
    int svg_every = 0;
};

int cmd_simulate(const SimulateArgs& a, const GlobalOpts& g) {
    const RunConfig cfg = runconfig_from_json(load_json_file(a.config));
    fs::path mesh_path(cfg.mesh_path);
    if (mesh_path.is_relative())
        mesh_path = fs::path(a.config).parent_path() / mesh_path;
    const MeshPtr mesh = std::make_shared<Mesh>(load_mesh(mesh_path.string()));
    const MatX& layout = require_layout(*mesh);

    FluidState s;
    s.emb = VolEmbedding{mesh, layout};
    // conditioning the start state keeps the first step's projection from
    // showing up as spurious drift in the diagnostics
    s.velocity = project_velocity({mesh, layout},
                                  initial_velocity_field(*mesh, layout, cfg.initial_velocity));
    s.tau = cfg.tau;
    s.time = 0.0;

    std::vector<TrajectoryRow> rows;
    const Diagnostics d0 = diagnostics(s);
    const double jr_ref = d0.jr_class.values.norm();
    const double vort_ref = d0.vorticity.norm();
    auto emit = [&](const Diagnostics& d, double time) {
        TrajectoryRow r;
        r.time = time;
        r.energy = d.energy;
        r.volume = d.volume;
        r.perimeter = d.perimeter;
        r.max_speed = d.max_speed;
        const double jd = (d.jr_class.values - d0.jr_class.values).norm();
        const double vd = (d.vorticity - d0.vorticity).norm();
        r.jr_drift = jr_ref > 0 ? jd / jr_ref : jd;
        r.vorticity_drift = vort_ref > 0 ? vd / vort_ref : vd;
        r.pressure_at_centroid = d.pressure_at_centroid;
        rows.push_back(r);
    };
    auto frame = [&](int k) {
        if (a.svg_every <= 0 || k % a.svg_every != 0)
            return;
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%06d.svg", k);
        char cap[96];
        std::snprintf(cap, sizeof(cap), "step %d  t=%.6g  E=%.6g  vol=%.6g", k, s.time,
                      rows.back().energy, rows.back().volume);
        write_text_file(out_path(g, name), boundary_svg(*mesh, s.emb.positions, cap));
    };

    emit(d0, s.time);
    frame(0);
    const std::string csv_path = out_path(g, "trajectory.csv");
    for (int k = 1; k <= cfg.steps; ++k) {
        try {
            s = step(s, cfg.dt, cfg.volume_correction);
        } catch (const ConstraintError& e) {
            write_text_file(csv_path, trajectory_csv(rows));
            std::cerr << "simulate: step " << k << " rejected: " << e.what() << "\n";
            return 1;
        }
        emit(diagnostics(s), s.time);
        frame(k);
    }
    write_text_file(csv_path, trajectory_csv(rows));

    const double e0 = rows.front().energy;
    const double drift =
        e0 != 0 ? std::abs(rows.back().energy - e0) / std::abs(e0) : std::abs(rows.back().energy);
    std::ostringstream line;
    line << "simulate: steps=" << cfg.steps << " time=" << format_double(s.time)
         << " energy_drift=" << format_double(drift) << " -> " << csv_path;
    say(g, line.str());
    return 0;
}

struct DecomposeArgs {
    std::string mesh_path;
    std::string field_path;
};

int cmd_decompose(const DecomposeArgs& a, const GlobalOpts& g) {
    const MeshPtr mesh = std::make_shared<Mesh>(load_mesh(a.mesh_path));
    const MatX& layout = require_layout(*mesh);
    const VolEmbedding phi{mesh, layout};
    const json jf = load_json_file(a.field_path);
    const MatX raw = vertex_field_from_json(*mesh, jf, "velocity");

    // Unconstrained inputs are projected onto the volume-constraint tangent
    // space first; the output records that this happened.
    MatX v = raw;
    bool projected = false;
    if (raw.cwiseAbs().maxCoeff() > 0 &&
        tangent_defect(phi, PhaseTangent{raw, MatX::Zero(mesh->vertices, 2)}) > 1e-10) {
        v = tangent_project(phi, raw);
        projected = true;
    }

    const ConnectionSplit split = connection_split(phi, v);
    const MatX tangent_part = v - split.grad_part;
    const std::string path = out_path(g, "decompose.json");
    write_json_file(path, split_to_json(split, tangent_part, projected));
    std::ostringstream line;
    line << "decompose: |tangent|=" << format_double(tangent_part.norm())
         << " |gradient|=" << format_double(split.grad_part.norm())
         << " admissibility=" << format_double(split.admissibility_residual)
         << (projected ? " (input projected)" : "") << " -> " << path;
    say(g, line.str());
    return 0;
}

struct ReportArgs {
    std::vector<std::string> inputs;
    std::string out = "report.csv";
};

int cmd_report(const ReportArgs& a, const GlobalOpts& g) {
    std::string header;
    std::ostringstream merged;
    int data_rows = 0;
    for (const auto& path : a.inputs) {
        std::istringstream in(read_text_file(path));
        std::string line;
        if (!std::getline(in, line))
            throw SchemaError(path + ": empty CSV");
        if (header.empty()) {
            header = line;
            merged << header << "\n";
        } else if (line != header) {
            throw SchemaError(path + ": CSV header does not match the first input");
        }
        while (std::getline(in, line)) {
            if (!line.empty()) {
                merged << line << "\n";
                ++data_rows;
            }
        }
    }
    const std::string path = out_path(g, a.out);
    write_text_file(path, merged.str());
    std::ostringstream line;
    line << "report: inputs=" << a.inputs.size() << " rows=" << data_rows << " -> " << path;
    say(g, line.str());
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"desk-scale laboratory for free-boundary perfect fluids"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--tol", g.tol, "override the default check tolerance");
    app.add_option("--seed", g.seed, "seed for random phase points");
    app.add_option("--out-dir", g.out_dir, "directory for output files");
    app.add_flag("--quiet", g.quiet, "suppress the summary line");

    auto* mesh_cmd = app.add_subcommand("mesh", "mesh utilities");
    mesh_cmd->require_subcommand(1);
    mesh_cmd->fallthrough();
    auto* gen = mesh_cmd->add_subcommand("gen", "generate a reference mesh");
    gen->fallthrough();
    MeshGenArgs ga;
    gen->add_option("--shape", ga.shape, "square|disk|annulus")->required();
    gen->add_option("--n", ga.n, "square subdivisions per side");
    gen->add_option("--side", ga.side, "square side length");
    gen->add_option("--nr", ga.nr, "radial subdivisions");
    gen->add_option("--na", ga.na, "vertices around the rim");
    gen->add_option("--radius", ga.radius, "disk radius");
    gen->add_option("--rin", ga.rin, "annulus inner radius");
    gen->add_option("--rout", ga.rout, "annulus outer radius");
    gen->add_option("--out", ga.out, "output mesh file name");

    auto* verify = app.add_subcommand("verify", "run pairing checks on random phase points");
    verify->fallthrough();
    // frees -h so the witness function can be selected with --h
    verify->set_help_flag("--help", "print help");
    VerifyArgs va;
    verify->add_option("--mesh", va.mesh_path, "mesh file (default: unit square fixture)");
    verify->add_option("--suite", va.suite, "weak|strong|witness|all");
    verify->add_option("--family", va.family, "stream catalog family: poly|trig");
    verify->add_option("--degree", va.degree, "stream catalog degree");
    verify->add_option("--points", va.points, "number of random phase points");
    verify->add_option("--w-count", va.w_count, "size of the reference field list");
    verify->add_option("--h", va.h, "witness boundary function: coord-x|coord-y");

    auto* simulate = app.add_subcommand("simulate", "integrate a free-boundary flow");
    simulate->fallthrough();
    SimulateArgs sa;
    simulate->add_option("config", sa.config, "run config JSON")->required();
    simulate->add_option("--svg-every", sa.svg_every, "write a boundary frame every N steps");

    auto* decompose = app.add_subcommand("decompose", "split a velocity field");
    decompose->fallthrough();
    DecomposeArgs da;
    decompose->add_option("--mesh", da.mesh_path, "mesh file")->required();
    decompose->add_option("--field", da.field_path, "velocity field JSON")->required();

    auto* report = app.add_subcommand("report", "merge CSV summaries");
    report->fallthrough();
    ReportArgs ra;
    report->add_option("inputs", ra.inputs, "CSV files to merge")->required();
    report->add_option("--out", ra.out, "merged CSV file name");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed())
            return cmd_mesh_gen(ga, g);
        if (verify->parsed())
            return cmd_verify(va, g);
        if (simulate->parsed())
            return cmd_simulate(sa, g);
        if (decompose->parsed())
            return cmd_decompose(da, g);
        if (report->parsed())
            return cmd_report(ra, g);
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        // solver / constraint / regime / connectivity failures outside the
        // simulation loop all count as numerical failure
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace fbdp
