#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "georeward/eval.hpp"
#include "georeward/inertia_sim.hpp"
#include "georeward/server.hpp"

namespace georeward::cli {
namespace {

using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.emplace_back(trim(item));
  return parts;
}

double parse_double(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw std::invalid_argument("'" + key + "' expects a number, got '" + text + "'");
  }
}

long long parse_integer(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const long long value = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw std::invalid_argument("'" + key + "' expects an integer, got '" + text + "'");
  }
}

bool parse_bool(const std::string& text, const std::string& key) {
  const std::string v = ascii_lower(text);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("'" + key + "' expects a boolean, got '" + text + "'");
}

RewardWeights parse_weights(const std::vector<std::string>& parts) {
  if (parts.size() != 3) throw std::invalid_argument("weights expects three values a,b,c");
  RewardWeights w{parse_double(parts[0], "weights"), parse_double(parts[1], "weights"),
                  parse_double(parts[2], "weights")};
  if (!w.valid()) throw std::invalid_argument("weights must be finite and non-negative");
  return w;
}

// Applies one key/value setting. Keys are shared by the config file and the
// flags (flag --beta-kl is key beta_kl).
void apply_setting(CliConfig& c, const std::string& key, const std::vector<std::string>& values) {
  auto single = [&]() -> const std::string& {
    if (values.size() != 1) throw std::invalid_argument("'" + key + "' expects a single value");
    return values.front();
  };
  if (key == "weights") {
    c.engine.weights = parse_weights(values.size() == 1 ? split_list(values.front()) : values);
  } else if (key == "matching") {
    const auto policy = parse_matching_policy(single());
    if (!policy) throw std::invalid_argument("unknown matching policy '" + single() + "'");
    c.engine.task.matching = *policy;
  } else if (key == "kl") {
    const auto est = parse_kl_estimator(single());
    if (!est) throw std::invalid_argument("unknown kl estimator '" + single() + "'");
    c.engine.grpo.kl_estimator = *est;
  } else if (key == "epsilon_clip") {
    c.engine.grpo.epsilon_clip = parse_double(single(), key);
  } else if (key == "beta_kl") {
    c.engine.grpo.beta_kl = parse_double(single(), key);
  } else if (key == "epsilon_std") {
    c.engine.grpo.epsilon_std = parse_double(single(), key);
  } else if (key == "format") {
    const std::string v = ascii_lower(single());
    if (v != "strict" && v != "lenient") throw std::invalid_argument("format must be strict or lenient");
    c.engine.format = v == "strict" ? FormatPolicy::kStrict : FormatPolicy::kLenient;
  } else if (key == "embed_dim") {
    const long long dim = parse_integer(single(), key);
    if (dim <= 0) throw std::invalid_argument("embed_dim must be positive");
    c.engine.embedder.dimension = static_cast<std::size_t>(dim);
  } else if (key == "embed_seed") {
    c.engine.embedder.seed = static_cast<std::uint64_t>(parse_integer(single(), key));
  } else if (key == "host") {
    c.host = single();
  } else if (key == "port") {
    const long long port = parse_integer(single(), key);
    if (port < 0 || port > 65535) throw std::invalid_argument("port out of range");
    c.port = static_cast<int>(port);
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(parse_integer(single(), key));
  } else if (key == "strict") {
    c.strict = parse_bool(single(), key);
  } else if (key == "parallel") {
    const long long n = parse_integer(single(), key);
    if (n < 1) throw std::invalid_argument("parallel must be at least 1");
    c.parallel = static_cast<std::size_t>(n);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

void validate(const CliConfig& c) {
  if (!c.engine.grpo.valid()) {
    throw std::invalid_argument("GRPO settings out of range (epsilon_clip in (0,1), beta_kl >= 0)");
  }
}

// Flag values before merging; only flags actually given override the
// config file and environment.
struct FlagValues {
  std::optional<std::string> config_path;
  std::optional<std::string> weights;
  std::optional<std::string> matching;
  std::optional<std::string> kl;
  std::optional<std::string> epsilon_clip;
  std::optional<std::string> beta_kl;
  std::optional<std::string> epsilon_std;
  std::optional<std::string> format;
  std::optional<std::string> embed_dim;
  std::optional<std::string> embed_seed;
  std::optional<std::string> host;
  std::optional<std::string> port;
  std::optional<std::string> seed;
  std::optional<std::string> parallel;
  bool strict = false;
  std::string output;
};

CliConfig resolve(const FlagValues& flags) {
  CliConfig config;
  if (flags.config_path) apply_config_file(*flags.config_path, config);
  apply_environment(config);
  const std::pair<const char*, const std::optional<std::string>*> entries[] = {
      {"weights", &flags.weights},       {"matching", &flags.matching},
      {"kl", &flags.kl},                 {"epsilon_clip", &flags.epsilon_clip},
      {"beta_kl", &flags.beta_kl},       {"epsilon_std", &flags.epsilon_std},
      {"format", &flags.format},         {"embed_dim", &flags.embed_dim},
      {"embed_seed", &flags.embed_seed}, {"host", &flags.host},
      {"port", &flags.port},             {"seed", &flags.seed},
      {"parallel", &flags.parallel},
  };
  for (const auto& [key, value] : entries) {
    if (*value) apply_setting(config, key, {**value});
  }
  if (flags.strict) config.strict = true;
  validate(config);
  return config;
}

// Output sink: a file when a path is given, otherwise the provided stream.
class OutputSink {
 public:
  OutputSink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw UsageError("cannot open output file " + path);
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::vector<std::string> read_lines(const std::string& path, std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  if (path.empty() || path == "-") {
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
  }
  std::ifstream file(path);
  if (!file) throw UsageError("cannot open " + path);
  while (std::getline(file, line)) lines.push_back(line);
  return lines;
}

// Runs `work(i)` for i in [0, n) on up to `parallel` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t parallel, Fn work) {
  const std::size_t workers = std::min(std::max<std::size_t>(parallel, 1), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) work(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct ScoreOutcome {
  bool blank = false;
  std::optional<ScoreRequest> request;
  std::optional<ScoreResponse> response;
  ErrorCode code = ErrorCode::kInternal;
  std::string error;
};

int cmd_score(const CliConfig& config, const std::string& input, const std::string& output,
              const std::string& emit_eval, std::istream& in, std::ostream& out, std::ostream& err) {
  const auto lines = read_lines(input, in);
  const ScoringEngine engine(config.engine);
  std::vector<ScoreOutcome> outcomes(lines.size());
  parallel_for(lines.size(), config.parallel, [&](std::size_t i) {
    auto& o = outcomes[i];
    if (is_blank(lines[i])) {
      o.blank = true;
      return;
    }
    try {
      const json parsed = json::parse(lines[i], nullptr, false);
      if (parsed.is_discarded()) throw RequestError(ErrorCode::kInvalidRequest, "line is not valid JSON");
      o.request = score_request_from_json(parsed);
      o.response = engine.score(*o.request);
    } catch (const RequestError& e) {
      o.code = e.code();
      o.error = e.what();
    } catch (const std::exception& e) {
      o.code = ErrorCode::kInternal;
      o.error = e.what();
    }
  });

  OutputSink sink(output, out);
  std::optional<OutputSink> eval_sink;
  if (!emit_eval.empty()) eval_sink.emplace(emit_eval, out);
  int status = kExitOk;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    if (o.blank) continue;
    if (!o.response) {
      err << "line " << (i + 1) << ": " << to_string(o.code) << ": " << o.error << '\n';
      if (config.strict) return kExitUsage;
      json body = error_json(o.code, o.error);
      body["line"] = i + 1;
      sink.get() << body.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
      continue;
    }
    sink.get() << to_json(*o.response).dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    if (eval_sink) {
      // The first rollout is the top-1 prediction of the group.
      EvalRecord record;
      record.id = o.request->request_id;
      record.task = o.request->task;
      record.ground_truth = o.request->ground_truth;
      const auto sections = extract_sections(o.request->rollouts.front());
      if (sections.answer) record.prediction = parse_answer(record.task, *sections.answer);
      eval_sink->get() << to_json(record).dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    }
  }
  return status;
}

int cmd_eval(const CliConfig& config, const std::string& input, const std::optional<std::string>& task_name,
             const std::string& thresholds_text, const std::string& format, const std::string& output,
             std::istream& in, std::ostream& out, std::ostream& err) {
  std::vector<double> thresholds;
  for (const auto& part : split_list(thresholds_text)) thresholds.push_back(parse_double(part, "thresholds"));

  LoadResult loaded;
  try {
    if (input.empty() || input == "-") {
      loaded = read_eval_records(in, config.strict);
    } else {
      loaded = load_eval_file(input, config.strict);
    }
  } catch (const EvalFileError& e) {
    err << input << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  for (const auto& d : loaded.skipped) err << input << ": line " << d.line << ": skipped: " << d.message << '\n';

  std::vector<MetricReport> reports;
  if (task_name) {
    const auto task = parse_task_type(*task_name);
    if (!task) throw UsageError("unknown task '" + *task_name + "'");
    try {
      reports.push_back(evaluate(loaded.records, *task, thresholds));
    } catch (const TaskMismatchError& e) {
      err << "task mismatch: " << e.what() << '\n';
      return kExitUsage;
    }
  } else {
    reports = evaluate_all(loaded.records, thresholds);
  }

  OutputSink sink(output, out);
  if (format == "json" || format == "both") {
    json body{{"reports", json::array()}};
    for (const auto& r : reports) body["reports"].push_back(to_json(r));
    sink.get() << body.dump() << '\n';
  }
  if (format == "table" || format == "both") sink.get() << format_table(reports);
  return kExitOk;
}

struct SimFlags {
  std::size_t steps = 300;
  std::size_t templates = 8;
  std::size_t group_size = 15;
  double learning_rate = 0.1;
  std::size_t seeds = 1;
  bool stochastic = false;
  bool clipped = false;
  bool compare_evol = false;
  std::string csv;
};

SimConfig make_sim_config(const CliConfig& config, const SimFlags& flags) {
  SimConfig sim;
  sim.template_count = flags.templates;
  sim.group_size = flags.group_size;
  sim.steps = flags.steps;
  sim.learning_rate = flags.learning_rate;
  sim.weights = config.engine.weights;
  sim.seed = config.seed;
  sim.stochastic_correctness = flags.stochastic;
  sim.clipped_surrogate = flags.clipped;
  sim.grpo = config.engine.grpo;
  sim.evolution = config.engine.evolution;
  if (sim.steps == 0) throw UsageError("--steps must be at least 1");
  if (sim.template_count < 2) throw UsageError("--templates must be at least 2");
  if (sim.group_size == 0) throw UsageError("--group-size must be at least 1");
  return sim;
}

std::vector<std::uint64_t> seed_list(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < count; ++i) seeds.push_back(first + i);
  return seeds;
}

int cmd_simulate(const CliConfig& config, const SimFlags& flags, const std::string& output, std::ostream& out) {
  const SimConfig sim = make_sim_config(config, flags);
  const HashedTokenEmbedder embedder(config.engine.embedder);
  const TemplateWorld world = make_template_world(sim.template_count, embedder);
  const auto seeds = seed_list(config.seed, std::max<std::size_t>(flags.seeds, 1));
  OutputSink sink(output, out);

  if (flags.compare_evol) {
    const EvolComparison cmp = compare_evol(world, sim, seeds, embedder, config.parallel);
    json body = to_json(cmp);
    body["weights_evol"] = sim.weights.evol;
    sink.get() << body.dump() << '\n';
    return kExitOk;
  }

  std::vector<SimTrajectory> runs(seeds.size());
  parallel_for(seeds.size(), config.parallel, [&](std::size_t i) {
    SimConfig run = sim;
    run.seed = seeds[i];
    runs[i] = simulate(world, run, embedder);
  });
  json summaries = json::array();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    SimConfig run = sim;
    run.seed = seeds[i];
    summaries.push_back(summary_json(runs[i], run));
    if (!flags.csv.empty()) {
      const std::string path =
          seeds.size() == 1 ? flags.csv : flags.csv + ".seed" + std::to_string(seeds[i]) + ".csv";
      std::ofstream file(path);
      if (!file) throw UsageError("cannot open " + path);
      write_csv(file, runs[i]);
    }
  }
  sink.get() << (seeds.size() == 1 ? summaries.front() : summaries).dump() << '\n';
  return kExitOk;
}

int cmd_plot_data(const CliConfig& config, const SimFlags& flags, const std::string& output, std::ostream& out) {
  const SimConfig sim = make_sim_config(config, flags);
  const HashedTokenEmbedder embedder(config.engine.embedder);
  const TemplateWorld world = make_template_world(sim.template_count, embedder);
  const auto seeds = seed_list(config.seed, std::max<std::size_t>(flags.seeds, 1));

  std::vector<SimTrajectory> with(seeds.size()), without(seeds.size());
  parallel_for(seeds.size(), config.parallel, [&](std::size_t i) {
    SimConfig a = sim;
    a.seed = seeds[i];
    SimConfig b = a;
    b.weights.evol = 0.0;
    with[i] = simulate(world, a, embedder);
    without[i] = simulate(world, b, embedder);
  });

  OutputSink sink(output, out);
  auto& os = sink.get();
  os << "step,entropy_evol,entropy_no_evol,mean_reward_evol,mean_reward_no_evol,top_prob_evol,top_prob_no_evol\n";
  os.precision(10);
  for (std::size_t s = 0; s < sim.steps; ++s) {
    auto column = [&](const std::vector<SimTrajectory>& runs, double SimStep::*field) {
      std::vector<double> values;
      for (const auto& r : runs) values.push_back(r.steps[s].*field);
      return median(values);
    };
    os << (s + 1) << ',' << column(with, &SimStep::entropy) << ',' << column(without, &SimStep::entropy) << ','
       << column(with, &SimStep::mean_reward) << ',' << column(without, &SimStep::mean_reward) << ','
       << column(with, &SimStep::top_template_prob) << ',' << column(without, &SimStep::top_template_prob)
       << '\n';
  }
  return kExitOk;
}

// Subcommand help followed by the global options every subcommand accepts.
std::string help_text(const CLI::App& app) {
  const auto selected = app.get_subcommands();
  if (selected.empty()) return app.help();
  std::string text = selected.front()->help();
  const auto formatter = std::dynamic_pointer_cast<CLI::Formatter>(app.get_formatter());
  if (formatter) {
    std::string groups = formatter->make_groups(&app, CLI::AppFormatMode::Normal);
    if (const auto at = groups.find("Options:"); at != std::string::npos) groups.replace(at, 8, "Global options:");
    text += groups;
  }
  return text;
}

}  // namespace

json to_json(const CliConfig& c) {
  json out = georeward::to_json(c.engine);
  out["service"] = {{"host", c.host}, {"port", c.port}};
  out["strict"] = c.strict;
  out["seed"] = c.seed;
  out["parallel"] = c.parallel;
  return out;
}

void apply_config_file(const std::string& path, CliConfig& config) {
  std::ifstream probe(path);
  if (!probe) throw std::invalid_argument("cannot read config file " + path);
  const CLI::ConfigTOML reader;
  for (const auto& item : reader.from_config(probe)) {
    // Section open/close markers.
    if (item.name == "++" || item.name == "--") continue;
    apply_setting(config, item.name, item.inputs);
  }
}

void apply_environment(CliConfig& config) {
  if (const char* host = std::getenv("GEOREWARD_HOST"); host && *host) apply_setting(config, "host", {host});
  if (const char* port = std::getenv("GEOREWARD_PORT"); port && *port) apply_setting(config, "port", {port});
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Verifiable reward engine for remote-sensing GRPO training: scoring, evaluation, serving "
               "and the template-policy simulator."};
  app.name(args.empty() ? "georeward" : args.front());
  app.require_subcommand(1);

  FlagValues flags;
  app.add_option("--config", flags.config_path, "Config file (key = value, TOML syntax)");
  app.add_flag("--strict", flags.strict, "Fail on the first malformed record (exit 2)");
  app.add_option("--seed", flags.seed, "Random seed (simulator)");
  app.add_option("--weights", flags.weights, "Reward weights srar,rpcr,evol (default 0.1,0.7,0.2)");
  app.add_option("--matching", flags.matching, "OVD matching policy: one_to_one | literal | greedy");
  app.add_option("--kl", flags.kl, "KL estimator: exact | k3");
  app.add_option("--epsilon-clip", flags.epsilon_clip, "PPO clip range (default 0.2)");
  app.add_option("--beta-kl", flags.beta_kl, "KL penalty weight (default 0.04)");
  app.add_option("--epsilon-std", flags.epsilon_std, "Degenerate-group std threshold (default 1e-8)");
  app.add_option("--format-policy", flags.format, "Tag format check: strict | lenient");
  app.add_option("--embed-dim", flags.embed_dim, "Reference embedder dimension (default 256)");
  app.add_option("--embed-seed", flags.embed_seed, "Reference embedder hash seed (default 0)");
  app.add_option("--host", flags.host, "Listen address for serve (env GEOREWARD_HOST)");
  app.add_option("--port", flags.port, "Listen port for serve (env GEOREWARD_PORT)");
  app.add_option("--output", flags.output, "Output path (default stdout)");
  app.add_option("--parallel", flags.parallel, "Worker threads for records or seeds");

  auto* score = app.add_subcommand("score", "Score line-delimited ScoreRequest records");
  std::string score_input = "-";
  std::string emit_eval;
  score->add_option("input", score_input, "Input file, '-' for stdin");
  score->add_option("--emit-eval", emit_eval, "Also write eval records built from each group's first rollout");

  auto* eval = app.add_subcommand("eval", "Compute Acc@t, COCO mAP and Pass@1 over an eval record file");
  std::string eval_input = "-";
  std::optional<std::string> eval_task;
  std::string eval_thresholds = "0.5,0.7";
  std::string eval_format = "both";
  eval->add_option("input", eval_input, "Record file, '-' for stdin");
  eval->add_option("--task", eval_task, "Require every record to be REC, OVD or VQA");
  eval->add_option("--thresholds", eval_thresholds, "Acc@t IoU thresholds for REC")->capture_default_str();
  eval->add_option("--report", eval_format, "json | table | both")
      ->check(CLI::IsMember({"json", "table", "both"}))
      ->capture_default_str();

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP scoring service");

  SimFlags sim_flags;
  auto add_sim_options = [&sim_flags](CLI::App* cmd) {
    cmd->add_option("--steps", sim_flags.steps, "Training steps")->capture_default_str();
    cmd->add_option("--templates", sim_flags.templates, "Number of reasoning templates")->capture_default_str();
    cmd->add_option("--group-size", sim_flags.group_size, "Rollouts per group")->capture_default_str();
    cmd->add_option("--lr", sim_flags.learning_rate, "Learning rate")->capture_default_str();
    cmd->add_option("--seeds", sim_flags.seeds, "Number of consecutive seeds starting at --seed")
        ->capture_default_str();
    cmd->add_flag("--stochastic", sim_flags.stochastic, "Bernoulli correctness at each template's rate");
    cmd->add_flag("--clipped", sim_flags.clipped, "Use the clipped surrogate update");
  };
  auto* simulate_cmd = app.add_subcommand("simulate", "Run the template-policy GRPO simulator");
  add_sim_options(simulate_cmd);
  simulate_cmd->add_flag("--compare-evol", sim_flags.compare_evol,
                         "Paired runs with evol weight 0 vs configured; report the entropy gap");
  simulate_cmd->add_option("--csv", sim_flags.csv, "Write the per-step trajectory CSV here");

  auto* plot_cmd = app.add_subcommand("plot-data", "Per-step median curves with and without the evol reward");
  add_sim_options(plot_cmd);

  auto* config_cmd = app.add_subcommand("config", "Print the resolved configuration as JSON");

  for (auto* sub : {score, eval, serve_cmd, simulate_cmd, plot_cmd, config_cmd}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << help_text(app);
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const bool help = e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success);
    if (help) {
      out << help_text(app);
      return kExitOk;
    }
    err << e.what() << '\n' << "Run with --help for usage.\n";
    return kExitUsage;
  }

  try {
    const CliConfig config = resolve(flags);
    if (*score) return cmd_score(config, score_input, flags.output, emit_eval, in, out, err);
    if (*eval) {
      return cmd_eval(config, eval_input, eval_task, eval_thresholds, eval_format, flags.output, in, out, err);
    }
    if (*serve_cmd) {
      ServiceConfig service{config.host, config.port, config.engine};
      return serve(service, err);
    }
    if (*simulate_cmd) return cmd_simulate(config, sim_flags, flags.output, out);
    if (*plot_cmd) return cmd_plot_data(config, sim_flags, flags.output, out);
    if (*config_cmd) {
      OutputSink sink(flags.output, out);
      sink.get() << to_json(config).dump(2) << '\n';
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace georeward::cli
