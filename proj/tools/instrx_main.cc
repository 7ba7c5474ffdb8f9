// Copyright 2026 The Instrx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: extract, evaluate, ablate, record, validate-dict,
// detect.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "instrx/orchestrator.h"

namespace fs = std::filesystem;

namespace {

// Flag overrides shared by the pipeline subcommands. Unset flags leave the
// config file value alone.
struct Overrides {
  std::string config;
  std::optional<std::string> input_dir, dictionary, templates, output_dir, transcript;
  std::optional<std::string> backend, input_mode, template_set, model, base_url, api_key_env;
  std::vector<std::string> steps;
  std::optional<std::int64_t> chunk_budget, overlap;
  std::optional<std::size_t> concurrency;
  std::optional<std::uint64_t> seed;
  std::optional<double> fuzzy_threshold, rpm;
  bool fail_fast = false;
  bool collapse_subtests = false;
};

void AddOverrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "Run config file (JSON)");
  cmd->add_option("--input-dir", o.input_dir, "Directory of parsed-document JSON files");
  cmd->add_option("--dictionary", o.dictionary, "Instrument dictionary JSON");
  cmd->add_option("--templates", o.templates, "Prompt template root directory");
  cmd->add_option("--template-set", o.template_set, "Prompt template set name");
  cmd->add_option("-o,--output-dir", o.output_dir, "Output directory");
  cmd->add_option("--backend", o.backend, "mock, live or record")
      ->check(CLI::IsMember({"mock", "live", "record"}));
  cmd->add_option("--transcript", o.transcript, "Mock transcript (JSONL)");
  cmd->add_option("--steps", o.steps, "Chain steps: ex, sum, dec")->delimiter(',');
  cmd->add_option("--input-mode", o.input_mode, "method_excerpt or full_text");
  cmd->add_option("--chunk-budget", o.chunk_budget, "Tokens per chunk");
  cmd->add_option("--overlap", o.overlap, "Overlap tokens between chunks");
  cmd->add_option("--concurrency", o.concurrency, "Documents processed in parallel");
  cmd->add_option("--seed", o.seed, "Seed for retry jitter");
  cmd->add_option("--fuzzy-threshold", o.fuzzy_threshold, "Fuzzy match threshold");
  cmd->add_option("--rpm", o.rpm, "Request rate limit per minute (0 = none)");
  cmd->add_option("--model", o.model, "Live backend model name");
  cmd->add_option("--base-url", o.base_url, "Live backend base URL");
  cmd->add_option("--api-key-env", o.api_key_env, "Environment variable holding the API key");
  cmd->add_flag("--fail-fast", o.fail_fast, "Stop at the first failing document");
  cmd->add_flag("--collapse-subtests", o.collapse_subtests, "Fold sub-tests into batteries");
}

std::string Absolute(const std::string& path) { return fs::absolute(path).string(); }

instrx::RunConfig BuildConfig(const Overrides& o) {
  instrx::RunConfig cfg;
  if (!o.config.empty()) {
    cfg = instrx::RunConfig::Load(o.config);
  } else {
    cfg.base_dir = fs::current_path();
  }
  if (o.input_dir) cfg.input_dir = Absolute(*o.input_dir);
  if (o.dictionary) cfg.dictionary = Absolute(*o.dictionary);
  if (o.templates) cfg.templates = Absolute(*o.templates);
  if (o.output_dir) cfg.output_dir = Absolute(*o.output_dir);
  if (o.transcript) cfg.backend.transcript = Absolute(*o.transcript);
  if (o.backend) {
    cfg.backend.mode = *o.backend == "live"     ? instrx::BackendMode::kLive
                       : *o.backend == "record" ? instrx::BackendMode::kRecord
                                                : instrx::BackendMode::kMock;
  }
  if (!o.steps.empty() || o.input_mode) {
    instrx::InputMode mode = cfg.chain.input_mode;
    if (o.input_mode) {
      const auto parsed = instrx::ParseInputMode(*o.input_mode);
      if (!parsed) {
        throw instrx::Error(instrx::ErrorKind::kConfigError,
                            "unknown input mode \"" + *o.input_mode + "\"");
      }
      mode = *parsed;
    }
    const std::string set = cfg.chain.prompt_template_set;
    if (o.steps.empty()) {
      cfg.chain.input_mode = mode;
    } else {
      cfg.chain = instrx::ChainConfig::FromStepNames(o.steps, mode);
      cfg.chain.prompt_template_set = set;
    }
  }
  if (o.template_set) cfg.chain.prompt_template_set = *o.template_set;
  if (o.chunk_budget) cfg.chunker.chunk_budget = *o.chunk_budget;
  if (o.overlap) cfg.chunker.overlap = *o.overlap;
  if (o.concurrency) cfg.concurrency = *o.concurrency;
  if (o.seed) cfg.seed = *o.seed;
  if (o.fuzzy_threshold) cfg.normalizer.fuzzy_threshold = *o.fuzzy_threshold;
  if (o.rpm) cfg.backend.requests_per_minute = *o.rpm;
  if (o.model) cfg.backend.live.model = *o.model;
  if (o.base_url) cfg.backend.live.base_url = *o.base_url;
  if (o.api_key_env) cfg.backend.live.api_key_env = *o.api_key_env;
  if (o.fail_fast) cfg.fail_fast = true;
  if (o.collapse_subtests) cfg.normalizer.collapse_subtests = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"instrx: research-instrument extraction from parsed papers"};
  app.require_subcommand(1);

  Overrides extract_o, record_o, ablate_o, detect_o;
  CLI::App* extract = app.add_subcommand("extract", "Run the pipeline over a corpus");
  AddOverrides(extract, extract_o);

  CLI::App* record = app.add_subcommand("record", "Live run that saves a replay transcript");
  AddOverrides(record, record_o);

  std::string grid, ablate_gold;
  CLI::App* ablate = app.add_subcommand("ablate", "Extract and evaluate a grid of chain configs");
  AddOverrides(ablate, ablate_o);
  ablate->add_option("--grid", grid, "Grid file (JSON)")->required();
  ablate->add_option("--gold", ablate_gold, "Gold annotations (JSON)")->required();

  instrx::EvaluateArgs eval;
  std::string eval_pred, eval_gold, eval_dict, eval_out;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against gold");
  evaluate->add_option("--predictions", eval_pred, "Prediction directory")->required();
  evaluate->add_option("--gold", eval_gold, "Gold annotations (JSON)")->required();
  evaluate->add_option("--dictionary", eval_dict, "Instrument dictionary JSON")->required();
  evaluate->add_option("-o,--output-dir", eval_out, "Report directory (default: predictions)");
  evaluate->add_option("--label", eval.label, "Configuration label for the report");
  evaluate->add_option("--fuzzy-threshold", eval.match.fuzzy_threshold, "Fuzzy match threshold");
  evaluate->add_flag("--collapse-subtests", eval.match.collapse_subtests,
                     "Fold sub-tests into batteries before matching");

  std::string dict_path;
  CLI::App* validate = app.add_subcommand("validate-dict", "Check an instrument dictionary");
  validate->add_option("dictionary", dict_path, "Dictionary JSON")->required();

  std::string labels;
  CLI::App* detect = app.add_subcommand("detect", "Print detected method spans");
  AddOverrides(detect, detect_o);
  detect->add_option("--labels", labels, "Expected spans (JSON) for an accuracy figure");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : instrx::kExitConfig;
  }

  try {
    if (*extract) return instrx::CmdExtract(BuildConfig(extract_o), std::cerr);
    if (*record) return instrx::CmdRecord(BuildConfig(record_o), std::cerr);
    if (*ablate) return instrx::CmdAblate(BuildConfig(ablate_o), grid, ablate_gold, std::cerr);
    if (*evaluate) {
      eval.predictions_dir = eval_pred;
      eval.gold = eval_gold;
      eval.dictionary = eval_dict;
      eval.output_dir = eval_out;
      return instrx::CmdEvaluate(eval, std::cout);
    }
    if (*validate) return instrx::CmdValidateDict(dict_path, std::cout);
    if (*detect) {
      std::optional<fs::path> label_path;
      if (!labels.empty()) label_path = labels;
      return instrx::CmdDetect(BuildConfig(detect_o), label_path, std::cout, std::cerr);
    }
  } catch (const instrx::Error& e) {
    std::cerr << "error [" << instrx::ErrorKindName(e.kind()) << "]: " << e.what() << "\n";
    return instrx::ExitCodeFor(e.kind());
  }
  return instrx::kExitConfig;
}
