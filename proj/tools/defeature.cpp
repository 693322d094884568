// defeature: run defeaturing sweeps and dump experiment meshes.
//
//   defeature run --config sweep.cfg [--out DIR] [--exact] [--jobs N]
//   defeature mesh --geometry NAME --param VALUE --out PATH
//
// Exit status: 0 success, 2 when some sweep points failed, 1 on bad input.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "defeat/config.hpp"
#include "defeat/mesh_io.hpp"

namespace fs = std::filesystem;
using namespace defeat;

namespace {

struct RunOptions {
    std::string config;
    std::string out_dir;
    bool exact = false;
    int jobs = 0;
};

struct MeshOptions {
    std::string geometry;
    double param = 0.0;
    std::string out;
    int resolution = 40;
    int depth = 0;
};

fs::path details_path(const fs::path &csv)
{
    fs::path p = csv;
    p.replace_filename(csv.stem().string() + "_details" + csv.extension().string());
    return p;
}

std::ofstream open_output(const fs::path &p)
{
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out)
        throw ConfigError("cannot write '" + p.string() + "'");
    return out;
}

int run(const RunOptions &opt)
{
    ExperimentConfig cfg = load_config(opt.config);
    if (opt.exact)
        cfg.with_exact = true;
    if (opt.jobs > 0)
        cfg.jobs = opt.jobs;

    fs::path csv = cfg.output_path.empty() ? fs::path(to_string(cfg.kind) + ".csv") : fs::path(cfg.output_path);
    if (!opt.out_dir.empty())
        csv = fs::path(opt.out_dir) / csv.filename();
    std::ofstream main_out = open_output(csv);
    std::ofstream details_out = open_output(details_path(csv));

    std::cerr << to_string(cfg.kind) << ": " << cfg.sweep.size() << " points, sweep over " << sweep_meaning(cfg.kind)
              << ", resolution " << cfg.resolution << ", depth " << cfg.refinement_depth
              << (cfg.with_exact ? ", with exact solves" : "") << '\n';
    const auto rows = run_sweep(cfg, [](const SweepRow &row) {
        if (row.error.empty())
            std::fprintf(stderr, "  %.6g done in %.1f s\n", row.param, row.seconds);
        else
            std::fprintf(stderr, "  %.6g failed: %s\n", row.param, row.error.c_str());
    });
    write_sweep_csv(main_out, rows);
    write_details_csv(details_out, rows);
    std::cerr << "wrote " << csv.string() << " and " << details_path(csv).string() << '\n';

    const auto failed = std::count_if(rows.begin(), rows.end(), [](const SweepRow &r) { return !r.report; });
    return failed > 0 ? 2 : 0;
}

int dump_mesh(const MeshOptions &opt)
{
    const ExperimentKind kind = parse_experiment_kind(opt.geometry);
    const MeshPair pair = build_mesh_pair(experiment_geometry(kind, opt.param), opt.resolution, opt.depth);
    validate_pair(pair);

    // The defeatured mesh carries the feature as its own region; the exact
    // mesh goes next to it.
    const fs::path path(opt.out);
    fs::path exact_path = path;
    exact_path.replace_filename(path.stem().string() + ".exact" + path.extension().string());
    std::ofstream def_out = open_output(path);
    write_mesh(def_out, *pair.defeatured);
    std::ofstream ex_out = open_output(exact_path);
    write_mesh(ex_out, *pair.exact);

    const Feature &f = pair.features.at(0);
    std::cerr << "defeatured: " << pair.defeatured->vertices.size() << " vertices, "
              << pair.defeatured->triangles.size() << " triangles -> " << path.string() << '\n'
              << "exact:      " << pair.exact->vertices.size() << " vertices, " << pair.exact->triangles.size()
              << " triangles -> " << exact_path.string() << '\n'
              << "feature " << f.id << " (" << to_string(f.kind) << "), |gamma| = " << make_chain(pair, f.id, MeshSide::Defeatured).measure
              << '\n';
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Defeaturing error estimation sweeps"};
    app.require_subcommand(1);

    RunOptions run_opt;
    auto *run_cmd = app.add_subcommand("run", "Run a parameter sweep described by a config file");
    run_cmd->add_option("--config", run_opt.config, "Config file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--out", run_opt.out_dir, "Directory for the CSV files (overrides output.path's directory)");
    run_cmd->add_flag("--exact", run_opt.exact, "Also solve on the exact geometry");
    run_cmd->add_option("--jobs", run_opt.jobs, "Sweep points solved concurrently")->check(CLI::PositiveNumber);

    MeshOptions mesh_opt;
    auto *mesh_cmd = app.add_subcommand("mesh", "Write the mesh pair of one experiment geometry");
    mesh_cmd->add_option("--geometry", mesh_opt.geometry, "Experiment name")
        ->required()
        ->check(CLI::IsMember({"poisson_boundary_feature", "poisson_internal_feature", "elasticity_cantilever_2d",
                               "stokes_lid_driven"}));
    mesh_cmd->add_option("--param", mesh_opt.param, "Sweep parameter of the experiment")->required();
    mesh_cmd->add_option("--out", mesh_opt.out, "Output path of the defeatured mesh")->required();
    mesh_cmd->add_option("--resolution", mesh_opt.resolution, "Background grid resolution")
        ->check(CLI::Range(4, 2000));
    mesh_cmd->add_option("--depth", mesh_opt.depth, "Refinement depth near the feature")->check(CLI::Range(0, 6));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*run_cmd)
            return run(run_opt);
        return dump_mesh(mesh_opt);
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
