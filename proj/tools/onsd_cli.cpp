#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "onsd/errors.hpp"
#include "onsd/evaluation.hpp"
#include "onsd/io.hpp"
#include "onsd/parallel.hpp"
#include "onsd/phantom.hpp"
#include "onsd/pipeline.hpp"

namespace fs = std::filesystem;
using namespace onsd;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kPipelineError = 3;
constexpr int kConfigError = 4;

struct GlobalOptions {
  std::string config_path;
  int jobs = 1;
  bool dump_signals = false;
  std::string seed_box;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InputError("cannot write " + path.string());
}

PipelineConfig load_config(const GlobalOptions& g) {
  PipelineConfig config;
  if (!g.config_path.empty()) {
    if (!fs::exists(g.config_path)) throw ConfigError("config file " + g.config_path + " not found");
    config = PipelineConfig::from_key_values(read_key_values(g.config_path));
  }
  if (!g.seed_box.empty()) config.seed_box = parse_box(g.seed_box);
  if (g.jobs < 1) throw ConfigError("--jobs must be >= 1");
  return config;
}

// Runs f, printing the error and returning its exit code on failure.
template <typename F>
int guarded(F&& f, std::string* message = nullptr) {
  const auto fail = [&](int code, const std::string& what) {
    if (message) *message = what;
    std::cerr << "error: " << what << "\n";
    return code;
  };
  try {
    f();
    return kOk;
  } catch (const InputError& e) {
    return fail(kInputError, e.what());
  } catch (const ConfigError& e) {
    return fail(kConfigError, e.what());
  } catch (const PipelineError& e) {
    return fail(kPipelineError, e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(kInputError, e.what());
  } catch (const std::exception& e) {
    return fail(kPipelineError, e.what());
  }
}

std::string status_name(int code) {
  switch (code) {
    case kOk: return "ok";
    case kInputError: return "input-error";
    case kConfigError: return "config-error";
    default: return "pipeline-error";
  }
}

int run_measure(const GlobalOptions& g, const std::vector<std::string>& inputs, std::string out_dir) {
  PipelineConfig config;
  std::vector<fs::path> videos;
  const int setup = guarded([&] {
    config = load_config(g);
    for (const auto& in : inputs) {
      for (auto& v : find_videos(in)) videos.push_back(std::move(v));
    }
    std::map<std::string, fs::path> ids;
    for (const auto& v : videos) {
      const auto [it, fresh] = ids.emplace(v.filename().string(), v);
      if (!fresh) {
        throw InputError("video id " + it->first + " appears twice (" + it->second.string() + ", " +
                         v.string() + ")");
      }
    }
  });
  if (setup != kOk) return setup;
  if (out_dir.empty()) out_dir = config.output_dir;

  const int n = static_cast<int>(videos.size());
  std::vector<BatchEntry> entries(static_cast<std::size_t>(n));
  // Several videos share the workers across videos; a single video uses them
  // for frame scoring.
  const int outer_jobs = n > 1 ? g.jobs : 1;
  const int inner_jobs = n > 1 ? 1 : g.jobs;
  parallel_for(n, outer_jobs, [&](int i) {
    BatchEntry& e = entries[static_cast<std::size_t>(i)];
    const fs::path& dir = videos[static_cast<std::size_t>(i)];
    e.video_id = dir.filename().string();
    e.exit_code = guarded(
        [&] {
          const MeasurementReport r = measure_directory(dir, config, inner_jobs);
          write_report_files(r, fs::path(out_dir) / e.video_id, g.dump_signals);
          e.onsd_px = r.measurement.width_px;
          e.onsd_mm = r.measurement.width_mm;
          e.optimal_frame = r.selection.optimal_index;
        },
        &e.error);
    e.status = status_name(e.exit_code);
  });

  int code = kOk;
  for (const auto& e : entries) {
    if (e.exit_code == kOk) {
      std::cout << e.video_id << ": ONSD " << *e.onsd_px << " px";
      if (e.onsd_mm) std::cout << " = " << *e.onsd_mm << " mm";
      std::cout << " (frame " << e.optimal_frame << ")\n";
    } else if (code == kOk) {
      code = e.exit_code;
    }
  }
  const int index = guarded([&] {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "index.json", batch_index_json(entries));
  });
  return code != kOk ? code : index;
}

int run_phantom(const GlobalOptions& g, const std::string& out_dir, const std::string& spec_path,
                int frames, unsigned long long seed) {
  return guarded([&] {
    load_config(g);
    PhantomSpec spec;
    if (!spec_path.empty()) {
      if (!fs::exists(spec_path)) throw ConfigError("phantom spec " + spec_path + " not found");
      spec = PhantomSpec::from_key_values(read_key_values(spec_path));
    }
    const Phantom p = generate_phantom(spec, frames, seed);
    write_sequence(p.video, out_dir);
    write_file(fs::path(out_dir) / "truth.json", truth_to_json(p.truth));
    std::cout << "wrote " << frames << " frames to " << out_dir << "\n";
  });
}

int run_evaluate(const GlobalOptions& g, const std::string& candidate_path, const std::string& reference_path,
                 std::string out_dir) {
  return guarded([&] {
    const PipelineConfig config = load_config(g);
    if (out_dir.empty()) out_dir = config.output_dir;
    const AlignedSeries data = align_series(read_series_csv(candidate_path), read_series_csv(reference_path));
    AgreementReport report;
    try {
      report = agreement(data.candidate, data.reference);
    } catch (const std::invalid_argument& e) {
      throw InputError(std::string("evaluate: ") + e.what());
    } catch (const std::domain_error& e) {
      throw InputError(std::string("evaluate: ") + e.what());
    }
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "agreement.json", agreement_to_json(report, data));
    write_file(fs::path(out_dir) / "bland_altman.csv", bland_altman_csv(report, data));
    write_file(fs::path(out_dir) / "bland_altman.svg", bland_altman_svg(report));
    std::cout << "n=" << report.n << " mean_error=" << report.mean_error << "% mse=" << report.mse
              << " icc=" << report.icc.icc << " bias=" << report.bland_altman.bias << "\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Automated optic nerve sheath diameter measurement"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config_path, "key=value pipeline config file");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--dump-signals", g.dump_signals, "also write column, mass and KL signal CSVs and plots");
  app.add_option("--seed-box", g.seed_box, "first-frame ROI as x,y,w,h");

  auto* measure = app.add_subcommand("measure", "measure ONSD in one or more frame directories")->fallthrough();
  std::vector<std::string> inputs;
  std::string measure_out;
  measure->add_option("inputs", inputs, "frame directory, or a directory of frame directories")->required();
  measure->add_option("-o,--out", measure_out, "output directory (default: config output_dir)");

  auto* phantom = app.add_subcommand("phantom", "generate a synthetic video with ground truth")->fallthrough();
  std::string phantom_out;
  std::string spec_path;
  int frames = 100;
  unsigned long long seed = 0;
  phantom->add_option("out", phantom_out, "output directory")->required();
  phantom->add_option("--spec", spec_path, "key=value phantom spec file");
  phantom->add_option("--frames", frames, "frame count")->check(CLI::PositiveNumber);
  phantom->add_option("--seed", seed, "noise seed");

  auto* evaluate = app.add_subcommand("evaluate", "agreement statistics between two id,value series")->fallthrough();
  std::string candidate;
  std::string reference;
  std::string evaluate_out;
  evaluate->add_option("candidate", candidate, "candidate series CSV")->required();
  evaluate->add_option("reference", reference, "reference series CSV")->required();
  evaluate->add_option("-o,--out", evaluate_out, "output directory (default: config output_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  if (*measure) return run_measure(g, inputs, measure_out);
  if (*phantom) return run_phantom(g, phantom_out, spec_path, frames, seed);
  return run_evaluate(g, candidate, reference, evaluate_out);
}
