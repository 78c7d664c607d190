// Copyright 2026-present the mor project
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

// mor: build indexes, fuse, evaluate and simulate from one config file.
//
//   mor fuse --config pipeline.json fusion.modes='["rrf"]' output=out2

#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mor/config.h"
#include "mor/error.h"
#include "mor/pipeline.h"

namespace {

using Command = std::function<int(const mor::PipelineConfig&, std::ostream&)>;

int exit_code(const mor::Error& e) {
  if (dynamic_cast<const mor::ConfigError*>(&e)) return 2;
  if (dynamic_cast<const mor::IoError*>(&e)) return 3;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture-of-retrievers fusion engine"};
  app.require_subcommand(1);

  const std::map<std::string, std::pair<std::string, Command>> commands = {
      {"index", {"build BM25 indexes and clusterings", mor::cmd_index}},
      {"fuse", {"write fused runs and weight audits", mor::cmd_fuse}},
      {"eval", {"evaluate run files against qrels", mor::cmd_eval}},
      {"simulate-humans",
       {"add one oracle expert per domain and fuse", mor::cmd_simulate_humans}},
      {"sweep", {"threshold curve and best-of-X subsets", mor::cmd_sweep}},
  };

  std::string config_path;
  std::vector<std::string> overrides;
  std::map<CLI::App*, const Command*> handlers;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("-c,--config", config_path, "pipeline config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("overrides", overrides, "key=value overrides");
    handlers[sub] = &entry.second;
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [sub, handler] : handlers) {
      if (!sub->parsed()) continue;
      const mor::PipelineConfig config =
          mor::load_config(config_path, overrides);
      return (*handler)(config, std::cout);
    }
  } catch (const mor::Error& e) {
    std::cerr << "mor: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "mor: unexpected error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
