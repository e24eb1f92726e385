// splinefusion CLI: simulate the tapered-cantilever benchmark, fuse
// acceleration and strain CSVs into a full-field displacement estimate,
// evaluate NRMS errors, sweep the spline count, or reproduce the whole
// study in one command.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "splinefusion/csv.hpp"
#include "splinefusion/pipeline.hpp"

namespace fs = std::filesystem;
using namespace splinefusion;

namespace {

std::string fmt(double v) { return io::detail::csv_double(v); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

void write_meta(const fs::path& dir, const io::ScenarioConfig& cfg, Eigen::Index samples) {
    char hash[20];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(io::config_hash(cfg)));
    std::ostringstream meta;
    meta << "config_hash = " << hash << "\n"
         << "seed = " << cfg.seed << "\n"
         << "dt = " << fmt(cfg.dt) << "\n"
         << "duration = " << fmt(cfg.duration) << "\n"
         << "samples = " << samples << "\n"
         << "noise_accel_percent = " << fmt(cfg.noise_accel_percent) << "\n"
         << "noise_strain_percent = " << fmt(cfg.noise_strain_percent) << "\n";
    write_text(dir / "meta.txt", meta.str());
    write_text(dir / "scenario.cfg", io::serialize_config(cfg));
}

void run_simulate(const io::ScenarioConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const io::ScenarioData data = io::simulate_scenario(cfg);
    io::write_signal_csv((out_dir / "truth.csv").string(), data.truth);
    io::write_signal_csv((out_dir / "accel.csv").string(), data.accel);
    io::write_signal_csv((out_dir / "strain.csv").string(), data.strain);
    write_meta(out_dir, cfg, data.truth.samples());
    std::cout << "wrote " << (out_dir / "truth.csv").string() << ", accel.csv, strain.csv ("
              << data.truth.samples() << " samples, " << data.accel.channels()
              << "+" << data.strain.channels() << " sensor channels)\n";
}

void run_fuse(const io::ScenarioConfig& cfg, const std::string& accel_path,
              const std::string& strain_path, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const TimeSeriesMatrix accel = io::read_signal_csv(accel_path);
    const TimeSeriesMatrix strain = io::read_signal_csv(strain_path);
    const io::FusionResult fused = io::fuse_scenario(cfg, accel, strain);

    io::write_signal_csv((out_dir / "displacement_field.csv").string(),
                         io::field_to_timeseries(fused.field));

    // coefficients.csv: lambda_1..m then lambda_dot_1..m per tick
    std::ofstream out(out_dir / "coefficients.csv");
    if (!out) throw DataError("cannot open coefficients.csv for writing");
    const int m = fused.model.m;
    out << "t";
    for (int i = 1; i <= m; ++i) out << ",lambda_" << i;
    for (int i = 1; i <= m; ++i) out << ",lambda_dot_" << i;
    out << "\n";
    for (Eigen::Index k = 0; k < fused.trajectory.times.size(); ++k) {
        out << fmt(fused.trajectory.times(k));
        for (int i = 0; i < m; ++i) out << "," << fmt(fused.trajectory.coeffs(k, i));
        for (int i = 0; i < m; ++i) out << "," << fmt(fused.trajectory.coeff_rates(k, i));
        out << "\n";
    }
    std::cout << "wrote " << (out_dir / "displacement_field.csv").string() << " ("
              << fused.field.values.rows() << " samples x " << fused.field.values.cols()
              << " positions) and coefficients.csv (m=" << m << ")\n";
}

void run_evaluate(const std::string& est_path, const std::string& truth_path,
                  const std::optional<std::string>& csv_out) {
    const TimeSeriesMatrix est = io::read_signal_csv(est_path);
    const TimeSeriesMatrix truth = io::read_signal_csv(truth_path);
    const io::EvaluationReport report = io::evaluate_displacement(est, truth);

    std::printf("%12s  %12s\n", "position", "nrms_percent");
    for (Eigen::Index c = 0; c < report.positions.size(); ++c)
        std::printf("%12.6g  %12.6g\n", report.positions(c), report.nrms_percent(c));
    std::printf("mean %.6g %%   max %.6g %%\n", report.mean_percent, report.max_percent);

    if (csv_out) {
        std::ofstream out(*csv_out);
        if (!out) throw DataError("cannot open '" + *csv_out + "' for writing");
        out << "position,nrms_percent\n";
        for (Eigen::Index c = 0; c < report.positions.size(); ++c)
            out << fmt(report.positions(c)) << "," << fmt(report.nrms_percent(c)) << "\n";
        out << "mean," << fmt(report.mean_percent) << "\n";
        out << "max," << fmt(report.max_percent) << "\n";
    }
}

std::vector<int> parse_m_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (...) {
            throw ConfigError("bad spline count '" + item + "' in -m list");
        }
    }
    if (out.empty()) throw ConfigError("-m list is empty");
    return out;
}

void run_sweep(const io::ScenarioConfig& cfg, const std::vector<int>& m_list,
               const std::string& out_path) {
    const fusion::SweepReport report = fusion::spline_sweep(cfg, m_list);
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot open '" + out_path + "' for writing");
    out << "m,mean_nrms,max_nrms\n";
    for (size_t i = 0; i < report.m_values.size(); ++i) {
        out << report.m_values[i] << "," << fmt(report.mean_nrms(static_cast<Eigen::Index>(i))) << ","
            << fmt(report.max_nrms(static_cast<Eigen::Index>(i))) << "\n";
        std::printf("m=%d  mean %.4g %%  max %.4g %%\n", report.m_values[i],
                    report.mean_nrms(static_cast<Eigen::Index>(i)),
                    report.max_nrms(static_cast<Eigen::Index>(i)));
    }
}

void run_case(const io::ScenarioConfig& cfg, const fs::path& dir) {
    run_simulate(cfg, dir);
    run_fuse(cfg, (dir / "accel.csv").string(), (dir / "strain.csv").string(), dir);
    run_evaluate((dir / "displacement_field.csv").string(), (dir / "truth.csv").string(),
                 (dir / "nrms.csv").string());
}

// simulate -> fuse -> evaluate for the collocated, non-collocated and the
// four noise-grid cases, plus the spline-count sweep.
void run_reproduce(const fs::path& out_dir) {
    io::ScenarioConfig collocated;  // defaults are the collocated 5%/5% case

    io::ScenarioConfig noncollocated = collocated;
    {
        const Eigen::VectorXd acc = io::noncollocated_accel_stations(noncollocated.length);
        const Eigen::VectorXd str = io::noncollocated_strain_stations(noncollocated.length);
        noncollocated.accel_positions.assign(acc.data(), acc.data() + acc.size());
        noncollocated.strain_positions.assign(str.data(), str.data() + str.size());
    }

    std::cout << "== collocated (5% / 5%) ==\n";
    run_case(collocated, out_dir / "collocated");
    std::cout << "== non-collocated (5% / 5%) ==\n";
    run_case(noncollocated, out_dir / "noncollocated");

    const std::pair<double, double> grid[] = {{5, 5}, {10, 10}, {5, 10}, {10, 5}};
    for (const auto& [na, ns] : grid) {
        io::ScenarioConfig c = collocated;
        c.noise_accel_percent = na;
        c.noise_strain_percent = ns;
        std::ostringstream name;
        name << "noise_" << na << "_" << ns;
        std::cout << "== noise grid " << na << "% / " << ns << "% ==\n";
        run_case(c, out_dir / name.str());
    }

    std::cout << "== spline sweep m in {6,7,8} ==\n";
    fs::create_directories(out_dir / "sweep");
    run_sweep(collocated, {6, 7, 8}, (out_dir / "sweep" / "sweep.csv").string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"B-spline Kalman fusion of acceleration and strain into full-field displacement"};
    app.require_subcommand(1);

    std::string config_path, accel_path, strain_path, est_path, truth_path, out_dir, m_list, out_csv;
    std::optional<std::string> eval_csv;

    auto* simulate = app.add_subcommand("simulate", "run the beam simulator and write sensor CSVs");
    simulate->add_option("-c,--config", config_path, "scenario config file")->required();
    simulate->add_option("-o,--output", out_dir, "output directory")->required();

    auto* fuse = app.add_subcommand("fuse", "fuse acceleration and strain CSVs into displacement");
    fuse->add_option("-c,--config", config_path, "scenario config file")->required();
    fuse->add_option("-a,--accel", accel_path, "acceleration CSV")->required();
    fuse->add_option("-s,--strain", strain_path, "strain CSV")->required();
    fuse->add_option("-o,--output", out_dir, "output directory")->required();

    auto* evaluate = app.add_subcommand("evaluate", "per-position NRMS of an estimate vs truth");
    evaluate->add_option("-e,--estimated", est_path, "estimated displacement CSV")->required();
    evaluate->add_option("-t,--truth", truth_path, "reference displacement CSV")->required();
    evaluate->add_option("-o,--output", out_csv, "optional NRMS CSV");

    auto* sweep = app.add_subcommand("sweep", "rerun the pipeline for several spline counts");
    sweep->add_option("-c,--config", config_path, "scenario config file")->required();
    sweep->add_option("-m", m_list, "comma-separated spline counts, e.g. 6,7,8")->required();
    sweep->add_option("-o,--output", out_csv, "sweep report CSV")->required();

    auto* reproduce = app.add_subcommand("reproduce-paper",
                                         "simulate+fuse+evaluate for all benchmark cases and sweep");
    reproduce->add_option("-o,--output", out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) {
            run_simulate(io::load_config(config_path), out_dir);
        } else if (fuse->parsed()) {
            run_fuse(io::load_config(config_path), accel_path, strain_path, out_dir);
        } else if (evaluate->parsed()) {
            if (!out_csv.empty()) eval_csv = out_csv;
            run_evaluate(est_path, truth_path, eval_csv);
        } else if (sweep->parsed()) {
            run_sweep(io::load_config(config_path), parse_m_list(m_list), out_csv);
        } else if (reproduce->parsed()) {
            run_reproduce(out_dir);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
