/*
 * Copyright 2026 The usbf Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <string>

#include "doctest.h"
#include "usbf/config.hpp"
#include "usbf/errors.hpp"

using namespace usbf;

TEST_SUITE("config") {

TEST_CASE("defaults are the desk-scale setup") {
  const ExperimentConfig c = ExperimentConfig::desk();
  CHECK(c == ExperimentConfig{});
  CHECK(c.small_array().size() == 17);
  CHECK(c.large_array().size() == 33);
  CHECK(c.pitch() == doctest::Approx(0.264e-3));
  CHECK(c.acquisition().echo_delay == doctest::Approx(0.25e-6));
  const ExperimentConfig p = ExperimentConfig::full_scale();
  CHECK(p.small_array().size() == 33);
  CHECK(p.large_array().size() == 65);
  CHECK(p.scan_lines == 65);
  CHECK(p.pairs == 30000);
}

TEST_CASE("text round trip") {
  ExperimentConfig c = ExperimentConfig::desk();
  c.technique = Technique::STA;
  c.seed = 123456789012345ULL;
  c.points_mm = {{-3.5, 40.0}, {2.0, 55.5}};
  c.aperture_factors = {1, 4};
  c.sidelobe_mix = 0.3;
  c.overlap_radius = 2;
  const ExperimentConfig back = ExperimentConfig::parse(c.to_text());
  CHECK(back == c);
  CHECK(back.to_text() == c.to_text());

  const auto path = std::filesystem::temp_directory_path() / "usbf_test_config.ini";
  c.save(path);
  CHECK(ExperimentConfig::load(path) == c);
  std::filesystem::remove(path);
}

TEST_CASE("partial files keep the remaining defaults") {
  const auto c = ExperimentConfig::parse("# comment\n[experiment]\ntechnique = pa\n\n[train]\nepochs = 3  \n");
  CHECK(c.technique == Technique::PA);
  CHECK(c.epochs == 3);
  CHECK(c.pairs == 8000);
}

TEST_CASE("errors name the problem") {
  const auto message = [](const std::string& text) {
    try {
      ExperimentConfig::parse(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("[train]\nepoch = 3\n").find("unknown key 'epoch'") != std::string::npos);
  CHECK(message("[trainer]\n").find("unknown section") != std::string::npos);
  CHECK(message("[train]\nepochs = 3\nepochs = 4\n").find("duplicate") != std::string::npos);
  CHECK(message("[train]\nepochs = three\n").find("line 2") != std::string::npos);
  CHECK(message("epochs = 3\n").find("outside of any section") != std::string::npos);
  CHECK(message("[train]\nepochs\n").find("key = value") != std::string::npos);
  CHECK(message("[dataset]\nsidelobe_mix = 2\n").find("sidelobe_mix") != std::string::npos);
  CHECK(message("[imaging]\noverlap_radius = 16\n").find("overlap_radius") != std::string::npos);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/usbf.ini"), IoError);
}

}  // TEST_SUITE
