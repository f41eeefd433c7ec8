#include "commands.hpp"

#include <ctime>
#include <iomanip>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cbm/detection/rules.hpp"
#include "cbm/engine/engine.hpp"
#include "cbm/reliability/hazard.hpp"
#include "cbm/reliability/weibull.hpp"
#include "cbm/scheduler/compare.hpp"
#include "cbm/sim/scenario.hpp"
#include "cbm/store/journal.hpp"

namespace cbm::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream o(p, std::ios::binary);
    if (!o) throw Error("cannot write " + p.string());
    o << text;
    if (!o) throw Error("cannot write " + p.string());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Validation failures map to exit 2, everything else to exit 1.
template <typename F>
CommandResult guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const sim::InvalidSpec& e) {
        err << e.what() << "\n";
    } catch (const detection::InvalidRule& e) {
        err << e.what() << "\n";
    } catch (const scheduler::InvalidPolicy& e) {
        err << e.what() << "\n";
    } catch (const scheduler::InvalidCostTable& e) {
        err << e.what() << "\n";
    } catch (const scheduler::InvalidFraction& e) {
        err << e.what() << "\n";
    } catch (const reliability::InsufficientData& e) {
        err << e.what() << "\n";
    } catch (const reliability::DegenerateSample& e) {
        err << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return {kExitRuntime, std::nullopt};
    }
    return {kExitInvalid, std::nullopt};
}

detection::RuleSet rules_or_failure_limits(const std::optional<std::string>& path) {
    if (path) return detection::load_rules(*path);
    detection::RuleSet rs;
    rs.failure_limits = Severity::warning;
    return rs;
}

}  // namespace

std::pair<std::vector<double>, std::vector<bool>> parse_lifetimes(const std::string& text) {
    std::vector<double> t;
    std::vector<bool> c;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        double value = 0.0;
        if (!(fields >> value)) {
            if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
            throw reliability::InsufficientData(fmt::format("line {}: not a lifetime", lineno));
        }
        int flag = 0;
        if (fields.peek() == ',') fields.get();
        if (!(fields >> flag)) flag = 0;
        if (flag != 0 && flag != 1) throw reliability::InsufficientData(fmt::format("line {}: censor flag must be 0 or 1", lineno));
        t.push_back(value);
        c.push_back(flag == 1);
    }
    return {std::move(t), std::move(c)};
}

Timestamp parse_instant(const std::string& text) {
    if (!text.empty() && text.find_first_not_of("-0123456789") == std::string::npos) {
        return from_epoch_ms(std::stoll(text));
    }
    std::tm tm{};
    std::istringstream in(text);
    in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
    if (in.fail() || in.get() != 'Z') throw Error("cannot parse instant '" + text + "'");
    return from_epoch_ms(static_cast<std::int64_t>(::timegm(&tm)) * 1000);
}

CommandResult cmd_validate(const std::string& scenario, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        out << sim::normalized_scenario(sim::load_scenario(scenario));
        return CommandResult{};
    });
}

CommandResult cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() -> CommandResult {
        auto scenario = sim::load_scenario(opts.scenario);
        if (opts.seed) scenario.seed = *opts.seed;
        const auto rules = rules_or_failure_limits(opts.rules);
        engine::EngineConfig cfg;
        cfg.inspection_fraction = opts.inspection_fraction;

        std::optional<store::Store> st;
        std::optional<store::Journal> journal;
        if (opts.out) {
            const fs::path dir(*opts.out);
            fs::create_directories(dir);
            fs::remove(dir / "anomalies.jsonl");
            fs::remove_all(dir / "store");
            st.emplace(store::StoreConfig{dir / "store", std::nullopt, store::Durability::flush});
            journal.emplace(dir / "anomalies.jsonl", store::Durability::flush);
        }
        engine::Engine eng(scenario, rules, cfg, st ? &*st : nullptr, journal ? &*journal : nullptr);
        eng.run_simulation();
        const auto summary = engine::summarize(scenario, eng.anomalies());
        const auto& n = eng.counts();
        out << engine::summary_table(summary);
        out << fmt::format("frames received {}, accepted {}, quarantined {}, substituted {}\n", n.received,
                           n.accepted, n.quarantined, n.substituted);
        CommandResult result;
        if (opts.out) {
            const fs::path dir(*opts.out);
            write_file(dir / "ground_truth.json", engine::ground_truth_json(scenario));
            write_file(dir / "summary.json", engine::summary_json(summary));
            write_file(dir / "summary.txt", engine::summary_table(summary));
            write_file(dir / "scenario.json", sim::normalized_scenario(scenario));
            result.report_path = (dir / "summary.json").string();
        }
        return result;
    });
}

CommandResult cmd_compare(const CompareOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() -> CommandResult {
        auto scenario = sim::load_scenario(opts.scenario);
        if (opts.seed) scenario.seed = *opts.seed;
        const auto policies = scheduler::load_policies(opts.policies);
        const auto costs = scheduler::load_costs(opts.costs);
        std::optional<detection::RuleSet> rules;
        if (opts.rules) rules = detection::load_rules(*opts.rules);
        const auto report = scheduler::compare_policies(scenario, policies, costs, rules ? &*rules : nullptr);
        out << report.table();
        CommandResult result;
        if (opts.out) {
            const fs::path dir(*opts.out);
            fs::create_directories(dir);
            write_file(dir / "comparison.txt", report.table());
            write_file(dir / "comparison.json", report.json());
            result.report_path = (dir / "comparison.json").string();
        }
        return result;
    });
}

CommandResult cmd_fit(const std::string& lifetimes, bool json, std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() -> CommandResult {
        const auto [t, c] = parse_lifetimes(read_file(lifetimes));
        std::vector<char> flags(c.begin(), c.end());
        std::unique_ptr<bool[]> censored(new bool[flags.size()]);
        for (std::size_t i = 0; i < flags.size(); ++i) censored[i] = flags[i];
        const auto model = reliability::fit_weibull(t, std::span<const bool>(censored.get(), flags.size()));
        std::string shape;
        try {
            shape = to_string(reliability::classify_hazard_shape(reliability::hazard_curve(model)).id);
        } catch (const reliability::UnclassifiableShape&) {
            shape = "unclassifiable";
        }
        if (json) {
            ordered_json j;
            j["beta"] = model.shape();
            j["eta"] = model.scale();
            j["log_likelihood"] = *model.log_likelihood();
            j["n"] = model.fit_n();
            j["pattern"] = shape;
            out << j.dump(2) << "\n";
        } else {
            out << fmt::format("beta            {:.6f}\n", model.shape());
            out << fmt::format("eta             {:.6f}\n", model.scale());
            out << fmt::format("log-likelihood  {:.6f}\n", *model.log_likelihood());
            out << fmt::format("samples         {}\n", model.fit_n());
            out << fmt::format("pattern class   {}\n", shape);
        }
        return CommandResult{};
    });
}

CommandResult cmd_replay(const ReplayOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() -> CommandResult {
        const auto scenario = sim::load_scenario(opts.scenario);
        const auto rules = rules_or_failure_limits(opts.rules);
        if (!fs::exists(opts.store)) throw Error("no store at '" + opts.store + "'");
        store::Store st(store::StoreConfig{opts.store, std::nullopt, store::Durability::flush});
        std::optional<store::Journal> journal;
        if (opts.out) {
            fs::create_directories(*opts.out);
            fs::remove(fs::path(*opts.out) / "anomalies.jsonl");
            journal.emplace(fs::path(*opts.out) / "anomalies.jsonl", store::Durability::flush);
        }
        engine::EngineConfig cfg;
        cfg.inspection_fraction = opts.inspection_fraction;
        engine::Engine eng(scenario, rules, cfg, nullptr, journal ? &*journal : nullptr);
        const Timestamp until = opts.now.value_or(scenario.end());
        eng.replay(st, {scenario.start, until + Millis{1}}, until);
        for (const auto& e : eng.anomalies()) {
            if (!journal) out << detection::journal_line(e) << "\n";
        }
        out << fmt::format("replayed {} frames, {} anomalies\n", eng.counts().received, eng.anomalies().size());
        CommandResult result;
        if (opts.out) result.report_path = (fs::path(*opts.out) / "anomalies.jsonl").string();
        return result;
    });
}

}  // namespace cbm::cli
