// SPDX-License-Identifier: Apache-2.0
//
// beamsync: link-level simulator for over-the-air carrier synchronization
// Copyright (C) 2026 The beamsync authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// beamsync sweep <config> <output_dir> [--workers N]
// beamsync crb   <config>
// beamsync trial <config> [--scheme S] [--snr-db X] [--seed K] [--trial I] [--dump-channel FILE]
// beamsync drift <config> <output_dir>

#include "beamsync/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Over-the-air carrier synchronization link simulator"};
    app.set_version_flag("--version", beamsync::kToolVersion);
    app.require_subcommand(1);

    std::string config;
    std::string output_dir;
    std::optional<int> workers;

    auto* sweep = app.add_subcommand("sweep", "RMSE-vs-SNR Monte Carlo sweep; writes rmse.csv and a manifest");
    sweep->add_option("config", config, "experiment config file")->required();
    sweep->add_option("output_dir", output_dir, "directory for results")->required();
    sweep->add_option("--workers", workers, "worker threads (results do not depend on this)")
        ->check(CLI::PositiveNumber);

    auto* crb = app.add_subcommand("crb", "closed-form and numerical bound over the configured SNR grid");
    crb->add_option("config", config, "experiment config file")->required();

    beamsync::TrialOptions topt;
    double snr = 0.0;
    std::uint64_t seed = 0;
    auto* trial = app.add_subcommand("trial", "one protocol round, printed as key=value lines");
    trial->add_option("config", config, "experiment config file")->required();
    trial->add_option("--scheme", topt.scheme, "BeamSync | BeamSyncGenie | Analog | AnalogGenie");
    auto* snr_opt = trial->add_option("--snr-db", snr, "SNR in dB");
    auto* seed_opt = trial->add_option("--seed", seed, "master seed override");
    trial->add_option("--trial", topt.trial, "trial index");
    trial->add_option("--dump-channel", topt.dump_channel, "write the trial's channel matrix as CSV");

    auto* drift = app.add_subcommand("drift", "oscillator drift and resync timeline; writes drift.csv");
    drift->add_option("config", config, "experiment config file")->required();
    drift->add_option("output_dir", output_dir, "directory for results")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : beamsync::kExitConfig;
    }

    if (*sweep)
        return beamsync::cmd_sweep(config, output_dir, std::cout, std::cerr, workers);
    if (*crb)
        return beamsync::cmd_crb(config, std::cout, std::cerr);
    if (*trial) {
        if (*snr_opt)
            topt.snr_db = snr;
        if (*seed_opt)
            topt.seed = seed;
        return beamsync::cmd_trial(config, topt, std::cout, std::cerr);
    }
    return beamsync::cmd_drift(config, output_dir, std::cout, std::cerr);
}
