// Command-line surface for the grid auto-labeling pipeline:
//   emags synth   render a scenario into a grid stack plus ground truth
//   emags label   extract temporally consistent object labels
//   emags eval    compare labels against ground truth
//   emags render  draw per-slice images with label overlays
// Exit codes: 0 ok, 2 input error, 3 internal failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "emags/config.hpp"
#include "emags/eval.hpp"
#include "emags/io.hpp"
#include "emags/labels.hpp"
#include "emags/preprocess.hpp"
#include "emags/render.hpp"
#include "emags/synth.hpp"
#include "emags/tracer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

int line_of_byte(const std::string& text, size_t byte) {
  int line = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

bool parse_slice_range(const std::string& text, int* a, int* b) {
  const auto pos = text.find("..");
  if (pos == std::string::npos) return false;
  try {
    *a = std::stoi(text.substr(0, pos));
    *b = std::stoi(text.substr(pos + 2));
  } catch (...) {
    return false;
  }
  return true;
}

int cmd_synth(const std::string& input, const std::string& output,
              uint64_t seed) {
  std::string text;
  emags::Scenario scenario;
  try {
    text = read_file(input);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  try {
    scenario = emags::parse_scenario_json(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "error: " << input << ": parse error at line "
              << line_of_byte(text, e.byte) << ": " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << input << ": " << e.what() << "\n";
    return kExitInput;
  }

  try {
    const auto [emags, truth] = emags::generate(scenario, seed);
    emags::write_emags(emags, output + ".emags");
    emags::write_truth_jsonl(truth, output + ".truth.jsonl");
    std::cerr << "wrote " << output << ".emags (" << emags.slice_count()
              << " slices) and " << output << ".truth.jsonl ("
              << truth.boxes.size() << " boxes)\n";
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}

int cmd_label(const std::string& input, const std::string& buildings_path,
              const std::string& config_path, const std::string& output,
              int jobs) {
  emags::PipelineConfig cfg;
  emags::Emags stack;
  std::vector<emags::BuildingPolygon> buildings;
  try {
    if (!config_path.empty()) cfg = emags::load_config(config_path);
    cfg.jobs = jobs > 0 ? jobs : cfg.jobs;
    stack = emags::read_emags(input);
    if (!buildings_path.empty())
      buildings = emags::load_buildings_geojson(buildings_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }

  const emags::Preprocessed pre = emags::preprocess_all(stack, cfg);
  emags::RunSummary summary;
  const auto tracks = emags::run_all(stack, pre, buildings, cfg, &summary);
  const auto records = emags::tracks_to_records(tracks);
  emags::write_labels_jsonl(records, output);

  nlohmann::json sj{
      {"init_points", summary.initial_init_points},
      {"initializations", summary.initializations_attempted},
      {"rejected_prerequisite", summary.init_rejected_prerequisite},
      {"rejected_degenerate", summary.init_rejected_degenerate},
      {"tracks_completed", summary.tracks_completed},
      {"tracks_discarded", summary.tracks_discarded},
      {"discard_reasons", summary.discard_reasons},
      {"building_filter", !buildings_path.empty()},
  };
  std::ofstream ss(output + ".summary.json");
  ss << sj.dump(2) << "\n";

  for (const std::string& line : summary.log) std::cerr << line << "\n";
  std::cerr << "labeled " << summary.tracks_completed << " object(s), "
            << records.size() << " record(s)";
  if (buildings_path.empty()) std::cerr << " (building filter disabled)";
  std::cerr << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& labels_path, const std::string& truth_path,
             const std::string& output) {
  std::vector<emags::LabelRecord> labels;
  emags::GroundTruth truth;
  try {
    labels = emags::read_labels_jsonl(labels_path);
    truth = emags::read_truth_jsonl(truth_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  const emags::EvalReport report = emags::evaluate(labels, truth);
  const std::string text = emags::report_to_json(report);
  std::cout << text << "\n";
  if (!output.empty()) {
    std::ofstream os(output);
    os << text << "\n";
  }
  return kExitOk;
}

int cmd_render(const std::string& input, const std::string& labels_path,
               const std::string& slices, const std::string& out_dir) {
  emags::Emags stack;
  std::vector<emags::LabelRecord> labels;
  int t0 = 0, t1 = -1;
  try {
    stack = emags::read_emags(input);
    if (!labels_path.empty()) labels = emags::read_labels_jsonl(labels_path);
    t1 = stack.slice_count() - 1;
    if (!slices.empty() && !parse_slice_range(slices, &t0, &t1)) {
      std::cerr << "error: bad --slices range (expected A..B)\n";
      return kExitInput;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  try {
    const auto files = emags::render_frames(stack, labels, t0, t1, out_dir);
    std::cerr << "wrote " << files.size() << " frame(s) to " << out_dir << "\n";
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object label extraction for dynamic occupancy grid stacks"};
  app.require_subcommand(1);

  std::string input, output, buildings, config, labels, truth, slices;
  uint64_t seed = 0;
  int jobs = 1;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic stack");
  synth->add_option("--input", input, "scenario JSON")->required();
  synth->add_option("--output", output, "output prefix")->required();
  synth->add_option("--seed", seed, "RNG seed");

  CLI::App* label = app.add_subcommand("label", "extract object labels");
  label->add_option("--input", input, "EMAGS container")->required();
  label->add_option("--output", output, "labels JSONL path")->required();
  label->add_option("--buildings", buildings, "GeoJSON building polygons");
  label->add_option("--config", config, "pipeline config JSON");
  label->add_option("--jobs", jobs, "worker threads");

  CLI::App* eval = app.add_subcommand("eval", "compare labels to ground truth");
  eval->add_option("--labels", labels, "labels JSONL")->required();
  eval->add_option("--truth", truth, "truth JSONL")->required();
  eval->add_option("--output", output, "report JSON path");

  CLI::App* render = app.add_subcommand("render", "draw per-slice images");
  render->add_option("--input", input, "EMAGS container")->required();
  render->add_option("--labels", labels, "labels JSONL overlay");
  render->add_option("--slices", slices, "slice range A..B");
  render->add_option("--output", output, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitInput;
  }

  try {
    if (synth->parsed()) return cmd_synth(input, output, seed);
    if (label->parsed()) return cmd_label(input, buildings, config, output, jobs);
    if (eval->parsed()) return cmd_eval(labels, truth, output);
    if (render->parsed()) return cmd_render(input, labels, slices, output);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
