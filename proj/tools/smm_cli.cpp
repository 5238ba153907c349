// Command-line front end: parameter sweeps over the estimation pipeline,
// hierarchy validation, and the corrected vs strict-paper diff report.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "smm/sweep.hpp"

namespace {

smm::AxisSpec parse_axis(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : text) {
        if (ch == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    parts.push_back(cur);
    if (parts.size() < 4 || parts.size() > 5)
        throw smm::ConfigError("axis must be <param>:<lo>:<hi>:<n>[:log]");
    smm::AxisSpec axis;
    axis.param = parts[0];
    try {
        axis.lo = std::stod(parts[1]);
        axis.hi = std::stod(parts[2]);
        axis.count = std::stoi(parts[3]);
    } catch (const std::exception&) {
        throw smm::ConfigError("axis numbers could not be parsed in '" + text + "'");
    }
    if (parts.size() == 5) {
        if (parts[4] != "log")
            throw smm::ConfigError("axis scale must be 'log' when present");
        axis.log = true;
    }
    return axis;
}

void apply_sets(smm::SweepConfig& cfg, const std::vector<std::string>& sets) {
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw smm::ConfigError("--set expects key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        if (!smm::is_known_key(key))
            throw smm::ConfigError("--set: unknown key '" + key + "'");
        try {
            cfg.overrides[key] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
            throw smm::ConfigError("--set: bad numeric value in '" + kv + "'");
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spin-magnon-mechanical estimation toolkit"};
    app.require_subcommand(1);

    // ---- sweep ----
    auto* sweep = app.add_subcommand("sweep", "evaluate quantities over a parameter grid");
    std::string preset = "feasibility", axis_text, out_path, mode_text = "corrected";
    std::string config_path, dump_path, outputs_text;
    std::vector<std::string> sets;
    int jobs = 1;
    bool strict = false;
    sweep->add_option("--preset", preset, "parameter preset name");
    sweep->add_option("--axis", axis_text, "<param>:<lo>:<hi>:<n>[:log]")->required();
    sweep->add_option("--out", out_path, "output CSV path (default stdout)");
    sweep->add_option("--mode", mode_text, "corrected|strict_paper");
    sweep->add_option("--jobs", jobs, "worker threads");
    sweep->add_option("--set", sets, "key=value override (repeatable)");
    sweep->add_option("--config", config_path, "flat key=value config file");
    sweep->add_option("--outputs", outputs_text, "comma-separated quantity list");
    sweep->add_option("--dump-config", dump_path, "write the effective config and exit");
    sweep->add_flag("--strict", strict, "exit 3 when any row carries a failure reason");

    // ---- validate ----
    auto* validate = app.add_subcommand("validate", "check the time-scale hierarchy");
    std::string vpreset = "feasibility";
    std::vector<std::string> vsets;
    validate->add_option("--preset", vpreset, "parameter preset name");
    validate->add_option("--set", vsets, "key=value override (repeatable)");

    // ---- modediff ----
    auto* modediff =
        app.add_subcommand("modediff", "report columns that differ between modes");
    std::string dpreset = "feasibility", daxis_text, doutputs_text;
    std::vector<std::string> dsets;
    int djobs = 1;
    modediff->add_option("--preset", dpreset, "parameter preset name");
    modediff->add_option("--axis", daxis_text, "<param>:<lo>:<hi>:<n>[:log]")->required();
    modediff->add_option("--set", dsets, "key=value override (repeatable)");
    modediff->add_option("--outputs", doutputs_text, "comma-separated quantity list");
    modediff->add_option("--jobs", djobs, "worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sweep->parsed()) {
            smm::SweepConfig cfg;
            cfg.preset = preset;
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in) throw smm::ConfigError("cannot open config file " + config_path);
                for (const auto& [k, v] : smm::parse_config_stream(in)) cfg.overrides[k] = v;
            }
            apply_sets(cfg, sets);
            cfg.axis = parse_axis(axis_text);
            if (!outputs_text.empty()) {
                cfg.outputs.clear();
                std::string cur;
                for (char ch : outputs_text + ",") {
                    if (ch == ',') {
                        if (!cur.empty()) cfg.outputs.push_back(cur);
                        cur.clear();
                    } else {
                        cur.push_back(ch);
                    }
                }
            }
            if (mode_text == "corrected") cfg.mode = smm::Mode::Corrected;
            else if (mode_text == "strict_paper") cfg.mode = smm::Mode::StrictPaper;
            else throw smm::ConfigError("--mode must be corrected or strict_paper");
            cfg.jobs = jobs;
            cfg.validate();

            if (!dump_path.empty()) {
                std::ofstream out(dump_path);
                if (!out) throw smm::ConfigError("cannot write " + dump_path);
                out << smm::serialize_config(cfg);
                return 0;
            }

            const smm::SweepResult res = smm::run_sweep(cfg);
            if (out_path.empty()) {
                smm::write_csv(res, std::cout);
            } else {
                std::ofstream out(out_path);
                if (!out) throw smm::ConfigError("cannot write " + out_path);
                smm::write_csv(res, out);
            }
            if (strict && res.has_failures()) {
                std::cerr << "sweep: some rows carry failure reasons\n";
                return 3;
            }
            return 0;
        }

        if (validate->parsed()) {
            smm::SweepConfig cfg;
            cfg.preset = vpreset;
            apply_sets(cfg, vsets);
            auto [p, hp] = smm::materialize(cfg);
            const auto warnings = smm::hierarchy_warnings(p, hp.hierarchy_factor);
            if (warnings.empty()) {
                std::cout << "hierarchy ok\n";
            } else {
                for (const auto& w : warnings) std::cout << "warning: " << w << "\n";
            }
            return 0;
        }

        if (modediff->parsed()) {
            smm::SweepConfig cfg;
            cfg.preset = dpreset;
            apply_sets(cfg, dsets);
            cfg.axis = parse_axis(daxis_text);
            if (!doutputs_text.empty()) {
                cfg.outputs.clear();
                std::string cur;
                for (char ch : doutputs_text + ",") {
                    if (ch == ',') {
                        if (!cur.empty()) cfg.outputs.push_back(cur);
                        cur.clear();
                    } else {
                        cur.push_back(ch);
                    }
                }
            }
            cfg.jobs = djobs;
            cfg.validate();
            const auto diff = smm::mode_diff(cfg);
            if (diff.empty()) {
                std::cout << "modes identical over this grid\n";
            } else {
                for (const auto& d : diff)
                    std::cout << d.column << " max_rel=" << smm::format_double(d.max_rel)
                              << "\n";
            }
            return 0;
        }
    } catch (const smm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
