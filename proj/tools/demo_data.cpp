// Copyright 2026 The Habitat Forge Authors.
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

// Writes the synthetic demo corpus used by demo/pipeline.json.

#include <iostream>

#include "CLI11.hpp"
#include "demo_data.hpp"

int main(int argc, char** argv) {
  CLI::App app{"habitat-demo-data: write the synthetic demo corpus"};
  std::string out = "demo/data";
  habitat::demo::DemoOptions opts;
  app.add_option("--out", out, "output directory")->capture_default_str();
  app.add_option("--seed", opts.seed)->capture_default_str();
  app.add_option("--size", opts.size, "image side in pixels")->capture_default_str()->check(CLI::Range(16, 512));
  app.add_option("--train-per-class", opts.train_per_class)->capture_default_str();
  app.add_option("--test-per-class", opts.test_per_class)->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  try {
    const auto files = habitat::demo::generate(out, opts);
    std::cout << "wrote " << files.train.parent_path().string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
