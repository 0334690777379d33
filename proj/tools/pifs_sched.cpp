// Command-line surface: schedule construction, contraction/attractor
// analyses, dataset ingestion, and the exact-score chain simulator.
//
// Exit codes: 0 success, 1 usage/validation error, 2 I/O error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pifs/attractor.hpp"
#include "pifs/contraction.hpp"
#include "pifs/design.hpp"
#include "pifs/gaussian_sim.hpp"
#include "pifs/numerics.hpp"
#include "pifs/patches.hpp"
#include "pifs/regime.hpp"
#include "pifs/schedule.hpp"

namespace {

struct ScheduleArgs {
    std::string kind = "cosine";
    int T = 1000;
    double beta1 = 1e-4;
    double betaT = 0.02;
    double offset = 0.008;
    bool no_beta_clip = false;
    std::string subsample_spec;
};

void add_schedule_options(CLI::App* cmd, ScheduleArgs& args) {
    cmd->add_option("--kind", args.kind, "Schedule family: linear or cosine")
        ->check(CLI::IsMember({"linear", "cosine"}));
    cmd->add_option("--T", args.T, "Number of steps")->check(CLI::PositiveNumber);
    cmd->add_option("--beta1", args.beta1, "Linear schedule: first beta");
    cmd->add_option("--betaT", args.betaT, "Linear schedule: last beta");
    cmd->add_option("--offset", args.offset, "Cosine schedule offset");
    cmd->add_flag("--no-beta-clip", args.no_beta_clip, "Disable the 0.999 per-step beta cap (cosine)");
    cmd->add_option("--subsample", args.subsample_spec,
                    "stride:K, stride:K:TMAX, or list:t1,t2,... of executed parent timesteps");
}

// Flat "key = value" config with '#' comments; command-line flags override
// file values. Applied after parsing so explicitly passed options win.
void apply_config_file(CLI::App* cmd, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw pifs::IoError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            std::size_t a = s.find_first_not_of(" \t\r");
            std::size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string stripped = trim(line);
        if (stripped.empty()) continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected 'key = value' at line " + std::to_string(lineno));
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key.empty() || key == "config")
            throw std::invalid_argument("config: bad key at line " + std::to_string(lineno));
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (!opt)
            throw std::invalid_argument("config: unknown key '" + key + "' at line " +
                                        std::to_string(lineno));
        if (opt->count() == 0) {
            opt->add_result(value);
            opt->run_callback();
        }
    }
}

std::vector<int> parse_subsample(const std::string& spec, int T) {
    std::vector<int> executed;
    if (spec.rfind("stride:", 0) == 0) {
        std::string rest = spec.substr(7);
        std::size_t colon = rest.find(':');
        int stride = std::stoi(rest.substr(0, colon));
        int t_max = colon == std::string::npos ? T : std::stoi(rest.substr(colon + 1));
        if (stride < 1) throw std::invalid_argument("subsample: stride must be >= 1");
        for (int t = stride; t <= t_max; t += stride) executed.push_back(t);
    } else if (spec.rfind("list:", 0) == 0) {
        std::istringstream is(spec.substr(5));
        std::string cell;
        while (std::getline(is, cell, ',')) executed.push_back(std::stoi(cell));
    } else {
        throw std::invalid_argument("subsample: expected stride:K, stride:K:TMAX, or list:...");
    }
    return executed;
}

pifs::Schedule build_schedule(const ScheduleArgs& args) {
    pifs::Schedule s = args.kind == "linear"
                           ? pifs::make_linear(args.T, args.beta1, args.betaT)
                           : pifs::make_cosine(args.T, args.offset, !args.no_beta_clip);
    if (!args.subsample_spec.empty()) s = pifs::subsample(s, parse_subsample(args.subsample_spec, s.T));
    return s;
}

// Validate-then-write: output files are only opened after the payload exists.
void emit(const std::string& payload, const std::string& out_path) {
    if (out_path.empty() || out_path == "-") {
        std::cout << payload;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw pifs::IoError("cannot open output file: " + out_path);
    out << payload;
    if (!out) throw pifs::IoError("write failed: " + out_path);
}

std::vector<std::pair<int, double>> patch_lambdas(const pifs::PatchSpectrum& spectrum) {
    std::vector<std::pair<int, double>> out;
    for (const auto& p : spectrum.patches) out.emplace_back(std::stoi(p.id), p.lambda());
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"Schedule-geometry toolkit for deterministic denoising chains"};
    app.require_subcommand(1);
    std::vector<std::pair<CLI::App*, std::string>> config_paths;
    config_paths.reserve(16);  // option bindings reference elements in place
    auto add_config_option = [&](CLI::App* cmd) {
        config_paths.emplace_back(cmd, std::string());
        cmd->add_option("--config", config_paths.back().second,
                        "Flat key = value config file; flags override");
    };

    // schedule
    auto* sub_schedule = app.add_subcommand("schedule", "Export per-step geometry as CSV");
    ScheduleArgs sched_args;
    std::string sched_out;
    add_schedule_options(sub_schedule, sched_args);
    sub_schedule->add_option("--out", sched_out, "Output CSV path (default stdout)");
    add_config_option(sub_schedule);

    // compare
    auto* sub_compare = app.add_subcommand("compare", "Schedule comparison report");
    std::string compare_preset = "table1", compare_spectrum, compare_out;
    sub_compare->add_option("--presets", compare_preset, "table1 or table2")
        ->check(CLI::IsMember({"table1", "table2"}));
    sub_compare->add_option("--spectrum", compare_spectrum, "Patch spectrum CSV (enables IG columns)");
    sub_compare->add_option("--out", compare_out, "Output CSV path (default stdout)");
    add_config_option(sub_compare);

    // moran
    auto* sub_moran = app.add_subcommand("moran", "Solve the expansion-threshold product equation");
    ScheduleArgs moran_args;
    double moran_tol = 1e-11, moran_cap = 500.0;
    std::string moran_suppression;
    int moran_patch = -1;
    bool moran_averaged = false;
    add_schedule_options(sub_moran, moran_args);
    sub_moran->add_option("--tol", moran_tol, "Bisection residual tolerance")->check(CLI::PositiveNumber);
    sub_moran->add_option("--suppression", moran_suppression, "Suppression CSV for the corrected equation");
    sub_moran->add_option("--patch", moran_patch, "Restrict the corrected equation to one patch");
    sub_moran->add_flag("--patch-averaged", moran_averaged,
                        "Average suppression over patches instead of solving per patch");
    sub_moran->add_option("--cap", moran_cap, "Search cap for the corrected equation");
    add_config_option(sub_moran);

    // ky
    auto* sub_ky = app.add_subcommand("ky", "Kaplan-Yorke dimension report (JSON)");
    ScheduleArgs ky_args;
    std::string ky_spectrum, ky_suppression, ky_out;
    add_schedule_options(sub_ky, ky_args);
    sub_ky->add_option("--spectrum", ky_spectrum, "Patch spectrum CSV");
    sub_ky->add_option("--suppression", ky_suppression, "Suppression CSV (switches to corrected mode)");
    sub_ky->add_option("--out", ky_out, "Output path (default stdout)");
    add_config_option(sub_ky);

    // allocate
    auto* sub_allocate = app.add_subcommand("allocate", "Optimal sampling-step allocation");
    ScheduleArgs alloc_args;
    int alloc_N = 20;
    std::string alloc_out;
    add_schedule_options(sub_allocate, alloc_args);
    sub_allocate->add_option("--N", alloc_N, "Number of sampling steps")->check(CLI::PositiveNumber);
    sub_allocate->add_option("--out", alloc_out, "Output path (default stdout)");
    add_config_option(sub_allocate);

    // patches
    auto* sub_patches = app.add_subcommand("patches", "Estimate per-patch covariance spectra");
    std::string patches_format = "cifar10", patches_norm = "pm1", patches_out;
    std::vector<std::string> patches_inputs;
    int patch_size = 8;
    bool full_spectrum = false;
    double power_tol = 1e-9;
    sub_patches->add_option("--format", patches_format, "cifar10 or raw-f32")
        ->check(CLI::IsMember({"cifar10", "raw-f32"}));
    sub_patches->add_option("--input", patches_inputs, "Input file(s)");
    sub_patches->add_option("--patch-size", patch_size, "Patch side length")->check(CLI::PositiveNumber);
    sub_patches->add_option("--normalization", patches_norm, "pm1 ([-1,1]) or unit ([0,1])")
        ->check(CLI::IsMember({"pm1", "unit"}));
    sub_patches->add_flag("--full-spectrum", full_spectrum, "Emit full spectra by deflation (n_k <= 256)");
    sub_patches->add_option("--power-tol", power_tol, "Power-iteration relative tolerance");
    sub_patches->add_option("--out", patches_out, "Output spectrum CSV (default stdout)");
    add_config_option(sub_patches);

    // simulate
    auto* sub_simulate = app.add_subcommand("simulate", "Exact-score Gaussian chain simulator");
    ScheduleArgs sim_args;
    std::string sim_spectrum, sim_out;
    add_schedule_options(sub_simulate, sim_args);
    sub_simulate->add_option("--spectrum", sim_spectrum, "Patch spectrum CSV");
    sub_simulate->add_option("--out", sim_out, "Output gains CSV (default stdout)");
    add_config_option(sub_simulate);

    // regime
    auto* sub_regime = app.add_subcommand("regime", "Suppression margins and release report");
    ScheduleArgs regime_args;
    std::string regime_suppression, regime_spectrum, regime_out;
    add_schedule_options(sub_regime, regime_args);
    sub_regime->add_option("--suppression", regime_suppression, "Suppression CSV");
    sub_regime->add_option("--spectrum", regime_spectrum, "Patch spectrum CSV (per-patch variances)")
        ;
    sub_regime->add_option("--out", regime_out, "Output release CSV (default stdout)");
    add_config_option(sub_regime);

    // offset
    auto* sub_offset = app.add_subcommand("offset", "Cosine-offset boundary analysis");
    int offset_T = 1000;
    std::vector<double> offset_values{0.0, 0.008};
    std::string offset_out;
    sub_offset->add_option("--T", offset_T, "Number of steps")->check(CLI::PositiveNumber);
    sub_offset->add_option("--offsets", offset_values, "Offsets to analyse")->delimiter(',');
    sub_offset->add_option("--out", offset_out, "Output CSV path (default stdout)");
    add_config_option(sub_offset);

    // census
    auto* sub_census = app.add_subcommand("census", "Expansion-forcing step census");
    ScheduleArgs census_args;
    std::string census_spectrum, census_out;
    bool interior_only = false;
    add_schedule_options(sub_census, census_args);
    sub_census->add_option("--spectrum", census_spectrum, "Patch spectrum CSV");
    sub_census->add_flag("--interior-only", interior_only, "Exclude the boundary steps t=1 and t=T");
    sub_census->add_option("--out", census_out, "Output CSV path (default stdout)");
    add_config_option(sub_census);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints the diagnostic
        return code == 0 ? 0 : 1;
    }

    for (auto& [cmd, path] : config_paths)
        if (cmd->parsed() && !path.empty()) apply_config_file(cmd, path);

    if (sub_schedule->parsed()) {
        emit(pifs::geometry_csv(build_schedule(sched_args)), sched_out);
    } else if (sub_compare->parsed()) {
        std::vector<std::pair<std::string, pifs::Schedule>> schedules;
        if (compare_preset == "table1") {
            schedules.emplace_back("linear_ddpm", pifs::make_linear(1000, 1e-4, 0.02));
            schedules.emplace_back("cosine_orig", pifs::make_cosine(1000, 0.0));
            schedules.emplace_back("cosine_improved", pifs::make_cosine(1000, 0.008));
            pifs::Schedule cos0 = pifs::make_cosine(1000, 0.0);
            schedules.emplace_back("ddim50_cosine", pifs::subsample(cos0, parse_subsample("stride:20", 1000)));
        } else {
            schedules.emplace_back("linear_ddpm", pifs::make_linear(1000, 1e-4, 0.02));
            schedules.emplace_back("cosine_improved", pifs::make_cosine(1000, 0.008));
        }
        std::optional<pifs::PatchSpectrum> spectrum;
        if (!compare_spectrum.empty()) spectrum = pifs::read_spectrum(compare_spectrum);
        if (compare_preset == "table2" && !spectrum)
            throw std::invalid_argument("compare: --presets table2 requires --spectrum");
        emit(pifs::design::compare_csv(pifs::design::compare_schedules(schedules, spectrum)), compare_out);
    } else if (sub_moran->parsed()) {
        pifs::Schedule s = build_schedule(moran_args);
        std::ostringstream os;
        if (moran_suppression.empty()) {
            double root = pifs::moran_root(s, moran_tol);
            double min_ls = pifs::lambda_star(s, 1);
            int argmin = 1;
            for (int t = 2; t <= s.T; ++t) {
                double ls = pifs::lambda_star(s, t);
                if (ls < min_ls) {
                    min_ls = ls;
                    argmin = t;
                }
            }
            os << "lambda_star_star = " << pifs::format_full(root) << '\n'
               << "residual = " << pifs::format_full(std::abs(pifs::moran_product(s, root) - 1.0)) << '\n'
               << "min_lambda_star = " << pifs::format_full(min_ls) << " at t = "
               << s.timestep_label(argmin) << '\n';
        } else {
            pifs::SuppressionTable table = pifs::SuppressionTable::from_csv_file(moran_suppression);
            auto report_one = [&](std::optional<int> patch, const std::string& label) {
                auto res = pifs::moran_root_suppressed(s, table, patch, moran_cap, moran_tol);
                if (res.exceeds_cap)
                    os << "lambda_triple_star" << label << " exceeds cap = "
                       << pifs::format_full(res.cap) << '\n';
                else
                    os << "lambda_triple_star" << label << " = " << pifs::format_full(*res.root)
                       << " (residual " << pifs::format_full(res.residual) << ")" << '\n';
            };
            if (moran_averaged)
                report_one(std::nullopt, "");
            else if (moran_patch >= 0)
                report_one(moran_patch, "[" + std::to_string(moran_patch) + "]");
            else
                for (int k : table.patches()) report_one(k, "[" + std::to_string(k) + "]");
        }
        std::cout << os.str();
    } else if (sub_ky->parsed()) {
        if (ky_spectrum.empty()) throw std::invalid_argument("ky: --spectrum is required");
        pifs::Schedule s = build_schedule(ky_args);
        pifs::PatchSpectrum spectrum = pifs::read_spectrum(ky_spectrum);
        pifs::KYReport report;
        if (ky_suppression.empty())
            report = pifs::ky_gaussian(s, spectrum);
        else
            report = pifs::ky_suppressed(s, spectrum, pifs::SuppressionTable::from_csv_file(ky_suppression));
        emit(pifs::ky_report_json(report) + "\n", ky_out);
    } else if (sub_allocate->parsed()) {
        pifs::design::Allocation alloc = pifs::design::allocate_steps(build_schedule(alloc_args), alloc_N);
        std::ostringstream os;
        for (int t : alloc.timesteps) os << t << '\n';
        emit(os.str(), alloc_out);
    } else if (sub_patches->parsed()) {
        if (patches_inputs.empty()) throw std::invalid_argument("patches: --input is required");
        pifs::PatchCovarianceOptions opts;
        opts.patch_size = patch_size;
        opts.full_spectrum = full_spectrum;
        opts.power.tolerance = power_tol;
        pifs::PixelNormalization norm = patches_norm == "pm1" ? pifs::PixelNormalization::pm1
                                                              : pifs::PixelNormalization::unit;
        pifs::PatchSpectrum spectrum;
        if (patches_format == "cifar10") {
            pifs::ImageShape shape{32, 32, 3};
            pifs::PatchCovarianceRun run(shape, opts);
            pifs::read_cifar10(patches_inputs, norm, [&](const std::vector<float>& img) { run.feed(img); });
            spectrum = run.finalize();
        } else {
            if (patches_inputs.size() != 1)
                throw std::invalid_argument("patches: raw-f32 expects exactly one input file");
            pifs::ImageShape shape;
            std::vector<std::vector<float>> images;
            pifs::read_raw_f32(patches_inputs[0], shape,
                               [&](const std::vector<float>& img) { images.push_back(img); });
            spectrum = pifs::patch_covariances(images, shape, opts);
        }
        emit("patch,n_k,lambda\n" + pifs::spectrum_csv(spectrum), patches_out);
    } else if (sub_simulate->parsed()) {
        if (sim_spectrum.empty()) throw std::invalid_argument("simulate: --spectrum is required");
        pifs::Schedule s = build_schedule(sim_args);
        pifs::LinearChain chain = pifs::build_chain(s, pifs::read_spectrum(sim_spectrum));
        emit(pifs::gains_csv(chain), sim_out);
    } else if (sub_regime->parsed()) {
        if (regime_suppression.empty()) throw std::invalid_argument("regime: --suppression is required");
        if (regime_spectrum.empty()) throw std::invalid_argument("regime: --spectrum is required");
        pifs::Schedule s = build_schedule(regime_args);
        pifs::SuppressionTable table = pifs::SuppressionTable::from_csv_file(regime_suppression);
        pifs::PatchSpectrum spectrum = pifs::read_spectrum(regime_spectrum);
        pifs::ReleaseReport report = pifs::release_times(s, table, patch_lambdas(spectrum));
        emit(pifs::release_csv(report), regime_out);
    } else if (sub_offset->parsed()) {
        std::ostringstream os;
        os << "s_off,v1,L1_star,ratio_to_zero_offset\n";
        for (const auto& row : pifs::design::cosine_offset_analysis(offset_T, offset_values))
            os << pifs::format_full(row.s_off) << ',' << pifs::format_full(row.v1) << ','
               << pifs::format_full(row.L1_star) << ',' << pifs::format_full(row.ratio_to_zero_offset)
               << '\n';
        emit(os.str(), offset_out);
    } else if (sub_census->parsed()) {
        if (census_spectrum.empty()) throw std::invalid_argument("census: --spectrum is required");
        pifs::Schedule s = build_schedule(census_args);
        pifs::PatchSpectrum spectrum = pifs::read_spectrum(census_spectrum);
        pifs::design::CensusReport report = pifs::design::expansion_census(s, spectrum, !interior_only);
        std::ostringstream os;
        os << "patch,lambda,forcing_steps,total_steps\n";
        for (const auto& row : report.rows)
            os << row.patch << ',' << pifs::format_full(row.lambda) << ',' << row.forcing_steps << ','
               << row.total_steps << '\n';
        os << "# global_fraction = " << pifs::format_full(report.global_fraction) << '\n';
        emit(os.str(), census_out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const pifs::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
