// aerialvp: prompt enhancement, benchmarking and tool-server utilities.
//
// Exit codes: 0 ok, 1 user error, 2 runtime failure.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <thread>
#include <unistd.h>

#include <CLI11.hpp>

#include "aerialvp/config.hpp"
#include "aerialvp/engine.hpp"
#include "aerialvp/error.hpp"
#include "aerialvp/eval.hpp"
#include "aerialvp/stub_server.hpp"
#include "image_info.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace aerialvp::cli {

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kRuntimeError = 2;

namespace {

int fail(int code, const std::string& message) {
  std::cerr << "aerialvp: " << message << "\n";
  return code;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

struct Runtime {
  AppConfig config;
  McpClient client;
  LoadedRegistry registry;
  std::unique_ptr<ChatBackend> selector;
  std::unique_ptr<TaskEngine> engine;

  explicit Runtime(AppConfig cfg) : config(std::move(cfg)) {}

  void start_engine() {
    registry = build_registry(config, client);
    selector = make_selector(config);
    engine = std::make_unique<TaskEngine>(registry.registry, client, selector.get(), engine_options(config));
  }
};

// ---------------------------------------------------------------------------

struct EnhanceArgs {
  std::string image;
  std::string prompt;
  std::string registry;
  std::string out;
  std::string provenance;
  int width = 0;
  int height = 0;
};

int cmd_enhance(const EnhanceArgs& args) {
  if (!fs::exists(args.image)) return fail(kUserError, "image not found: " + args.image);
  int width = args.width;
  int height = args.height;
  if (width <= 0 || height <= 0) {
    auto size = read_image_size(args.image);
    if (!size) return fail(kUserError, "cannot determine image size; pass --width and --height");
    if (width <= 0) width = size->first;
    if (height <= 0) height = size->second;
  }
  std::optional<TaskPrompt> prompt;
  std::unique_ptr<Runtime> rt;
  try {
    prompt.emplace(args.prompt);
    rt = std::make_unique<Runtime>(AppConfig::load(args.registry));
    rt->start_engine();
  } catch (const InputError& err) {
    return fail(kUserError, err.what());
  }
  for (const auto& ep : rt->registry.endpoints) {
    if (!ep.reachable) std::cerr << "aerialvp: warning: " << ep.endpoint.key() << " unreachable: " << ep.error << "\n";
  }
  const TaskImage image{fs::path(args.image).stem().string(), width, height, args.image};
  EnhancedPrompt enhanced;
  try {
    enhanced = rt->engine->enhance(*prompt, image);
  } catch (const InputError& err) {
    return fail(kUserError, err.what());
  } catch (const Error& err) {
    return fail(kRuntimeError, err.what());
  }
  const auto provenance = to_json(enhanced.provenance).dump(2) + "\n";
  try {
    if (args.out.empty()) {
      std::cout << enhanced.text << "\n";
      if (args.provenance.empty()) {
        std::cerr << provenance;
      } else {
        write_file(args.provenance, provenance);
      }
    } else {
      write_file(args.out, enhanced.text);
      write_file(args.provenance.empty() ? args.out + ".provenance.json" : args.provenance, provenance);
    }
  } catch (const Error& err) {
    return fail(kRuntimeError, err.what());
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string dataset;
  std::string task = "all";
  std::string config;
  std::string out_dir;
  bool baseline = false;
  std::string kinds;
};

std::optional<TaskType> parse_task_filter(const std::string& task) {
  if (task == "all") return std::nullopt;
  auto t = task_from_code(task);
  if (!t) throw InputError("unknown task filter \"" + task + "\" (expected vg, vr, vqa or all)");
  return t;
}

std::vector<EnhancementKind> parse_kinds(const std::string& text) {
  if (text == "all") {
    return {EnhancementKind::SemanticDescription, EnhancementKind::SpatialPositionDescription,
            EnhancementKind::SpatialRelationshipDescription};
  }
  std::vector<EnhancementKind> kinds;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const auto item = text.substr(start, end - start);
    if (!item.empty()) {
      auto kind = parse_enhancement_kind(item);
      if (!kind) throw InputError("unknown enhancement kind \"" + item + "\"");
      kinds.push_back(*kind);
    }
    start = end + 1;
  }
  if (kinds.empty()) throw InputError("--kinds lists no enhancement kind");
  return kinds;
}

/// Shared setup of bench/ablate: config, samples, backends.
struct BenchSetup {
  std::unique_ptr<Runtime> rt;
  std::vector<Sample> samples;
  std::unique_ptr<ChatBackend> vlm;
  RunConfig run;
};

BenchSetup prepare_bench(const BenchArgs& args, bool needs_engine) {
  BenchSetup setup;
  setup.rt = std::make_unique<Runtime>(AppConfig::load(args.config));
  setup.run = run_config(setup.rt->config);
  setup.run.dataset_path = args.dataset;
  setup.run.task_filter = parse_task_filter(args.task);
  auto all = load_dataset(args.dataset);
  setup.samples = filter_samples(all, setup.run.task_filter);
  if (setup.samples.empty()) throw InputError("no samples left after filtering " + args.dataset);
  setup.vlm = make_vlm(setup.rt->config);
  if (setup.run.model.empty()) setup.run.model = setup.vlm->name();
  if (needs_engine) setup.rt->start_engine();
  return setup;
}

int cmd_bench(const BenchArgs& args) {
  BenchSetup setup;
  try {
    // Parse the filter before touching the dataset so a bad value is a usage error.
    parse_task_filter(args.task);
    BenchArgs effective = args;
    setup = prepare_bench(effective, false);
    if (args.baseline) setup.run.switches = kBaselineSwitches;
    if (setup.run.switches.any()) setup.rt->start_engine();
  } catch (const InputError& err) {
    return fail(kUserError, err.what());
  } catch (const Error& err) {
    return fail(kRuntimeError, err.what());
  }
  BenchmarkContext ctx{setup.rt->engine.get(), setup.vlm.get(), nullptr};
  try {
    auto report = run_benchmark(setup.run, setup.samples, ctx);
    write_report(report, args.out_dir);
    for (const auto& line : summary_rows(report)) std::cout << line << "\n";
    if (!report.valid) return fail(kRuntimeError, "run invalid: more than half of the samples failed");
  } catch (const InputError& err) {
    return fail(kUserError, err.what());
  } catch (const Error& err) {
    return fail(kRuntimeError, err.what());
  }
  return kOk;
}

int cmd_ablate(const BenchArgs& args) {
  BenchSetup setup;
  std::vector<EnhancementKind> kinds;
  try {
    kinds = parse_kinds(args.kinds);
    parse_task_filter(args.task);
    setup = prepare_bench(args, true);
  } catch (const InputError& err) {
    return fail(kUserError, err.what());
  } catch (const Error& err) {
    return fail(kRuntimeError, err.what());
  }
  // The grid covers the varied kinds only; the others stay off.
  setup.run.switches = kBaselineSwitches;
  BenchmarkContext ctx{setup.rt->engine.get(), setup.vlm.get(), nullptr};
  try {
    const auto reports = run_ablation(setup.run, kinds, setup.samples, ctx);
    bool valid = true;
    for (const auto& report : reports) {
      write_report(report, fs::path(args.out_dir) / report.config.switches.tag());
      valid = valid && report.valid;
    }
    write_summary(reports, fs::path(args.out_dir) / "summary.csv");
    for (const auto& report : reports) {
      for (const auto& line : summary_rows(report)) std::cout << line << "\n";
    }
    if (!valid) return fail(kRuntimeError, "at least one ablation run is invalid");
  } catch (const InputError& err) {
    return fail(kUserError, err.what());
  } catch (const Error& err) {
    return fail(kRuntimeError, err.what());
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_tools_list(const std::string& registry_path) {
  std::unique_ptr<Runtime> rt;
  try {
    rt = std::make_unique<Runtime>(AppConfig::load(registry_path));
    rt->registry = build_registry(rt->config, rt->client, true);
  } catch (const InputError& err) {
    return fail(kUserError, err.what());
  }
  const auto tools = rt->registry.registry.list();
  std::map<std::string, bool> reachable;
  for (const auto& ep : rt->registry.endpoints) reachable[ep.endpoint.key()] = ep.reachable;
  if (tools.empty()) std::cout << "no tools registered\n";
  if (!tools.empty()) {
    for (auto category : kAllToolCategories) {
      std::cout << to_string(category) << ":\n";
      const auto members = rt->registry.registry.screen_candidates(category);
      if (members.empty()) std::cout << "  (none)\n";
      for (const auto& t : members) {
        const auto it = reachable.find(t.endpoint.key());
        const bool ok = it == reachable.end() || it->second;
        std::cout << "  " << t.name << "  [" << to_string(t.endpoint.kind) << "] status="
                  << (ok ? "ok" : "unreachable") << "\n";
      }
    }
  }
  for (const auto& ep : rt->registry.endpoints) {
    if (!ep.reachable) {
      std::cout << "endpoint " << ep.endpoint.key() << " status=unreachable\n";
    }
  }
  return kOk;
}

int cmd_tools_describe(const std::string& registry_path, const std::string& name) {
  std::unique_ptr<Runtime> rt;
  try {
    rt = std::make_unique<Runtime>(AppConfig::load(registry_path));
    rt->registry = build_registry(rt->config, rt->client);
  } catch (const InputError& err) {
    return fail(kUserError, err.what());
  }
  const auto tool = rt->registry.registry.find(name);
  if (!tool) return fail(kUserError, "no tool named \"" + name + "\"");
  std::cout << "name: " << tool->name << "\n"
            << "category: " << to_string(tool->category) << "\n"
            << "description: " << tool->description << "\n"
            << "endpoint: " << tool->endpoint.key() << "\n"
            << "input_schema: " << tool->input_schema.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct ServeArgs {
  std::string manifest;
  std::string transport = "http";
  std::string host = "127.0.0.1";
  int port = 0;
};

int wait_for_signal(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
  return sig;
}

int cmd_serve_stub(const ServeArgs& args) {
  std::shared_ptr<const StubToolServer> server;
  try {
    std::ifstream in(args.manifest);
    if (!in) throw InputError("cannot open manifest " + args.manifest);
    json manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded()) throw InputError("manifest " + args.manifest + " is not JSON");
    server = std::make_shared<const StubToolServer>(StubToolServer::from_manifest(
        manifest, [](const json& spec) { return std::shared_ptr<ChatBackend>(make_backend(spec, "engine")); }));
  } catch (const InputError& err) {
    return fail(kUserError, err.what());
  }

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGINT);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  if (args.transport == "stdio") {
    std::thread([set] {
      wait_for_signal(set);
      std::_Exit(kOk);
    }).detach();
    server->serve_stream(STDIN_FILENO, STDOUT_FILENO);
    return kOk;
  }
  if (args.transport != "http") return fail(kUserError, "unknown transport \"" + args.transport + "\"");
  std::unique_ptr<HttpStubHost> host;
  try {
    host = std::make_unique<HttpStubHost>(server, args.host, args.port);
  } catch (const Error& err) {
    return fail(kRuntimeError, err.what());
  }
  std::cout << host->url() << std::endl;
  wait_for_signal(set);
  host->stop();
  return kOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"UAV perception prompt enhancement agent"};
  app.require_subcommand(1);

  EnhanceArgs enhance;
  auto* enhance_cmd = app.add_subcommand("enhance", "Enhance one task prompt");
  enhance_cmd->add_option("--image", enhance.image, "Task image path")->required();
  enhance_cmd->add_option("--prompt", enhance.prompt, "Original task instruction")->required();
  enhance_cmd->add_option("--registry", enhance.registry, "Registry/config JSON file")->required();
  enhance_cmd->add_option("--out", enhance.out, "Write the enhanced prompt here instead of stdout");
  enhance_cmd->add_option("--provenance", enhance.provenance,
                          "Provenance JSON path (default: <out>.provenance.json, or stderr)");
  enhance_cmd->add_option("--width", enhance.width, "Image width in pixels (default: read from file)");
  enhance_cmd->add_option("--height", enhance.height, "Image height in pixels (default: read from file)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a baseline or enhanced benchmark");
  bench_cmd->add_option("--dataset", bench.dataset, "JSONL dataset")->required();
  bench_cmd->add_option("--task", bench.task, "vg, vr, vqa or all")->capture_default_str();
  bench_cmd->add_option("--config", bench.config, "Run/registry config JSON file")->required();
  bench_cmd->add_option("--out-dir", bench.out_dir, "Report directory")->required();
  bench_cmd->add_flag("--baseline", bench.baseline, "Send raw instructions (all enhancements off)");

  BenchArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run the enhancement on/off grid");
  ablate_cmd->add_option("--dataset", ablate.dataset, "JSONL dataset")->required();
  ablate_cmd->add_option("--kinds", ablate.kinds,
                         "all, or a comma list of semantic, spatial_position, spatial_relationship")
      ->required();
  ablate_cmd->add_option("--out-dir", ablate.out_dir, "Output directory (one subdirectory per combination)")
      ->required();
  ablate_cmd->add_option("--config", ablate.config, "Run/registry config JSON file")->required();
  ablate_cmd->add_option("--task", ablate.task, "vg, vr, vqa or all")->capture_default_str();

  std::string tools_registry;
  std::string describe_name;
  auto* tools_cmd = app.add_subcommand("tools", "Inspect the tool registry");
  tools_cmd->require_subcommand(1);
  auto* list_cmd = tools_cmd->add_subcommand("list", "List tools grouped by category");
  list_cmd->add_option("--registry", tools_registry, "Registry/config JSON file")->required();
  auto* describe_cmd = tools_cmd->add_subcommand("describe", "Print one tool's schema");
  describe_cmd->add_option("name", describe_name, "Tool name")->required();
  describe_cmd->add_option("--registry", tools_registry, "Registry/config JSON file")->required();

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve-stub", "Serve scripted MCP tools");
  serve_cmd->add_option("--manifest", serve.manifest, "Stub manifest JSON")->required();
  serve_cmd->add_option("--transport", serve.transport, "http or stdio")
      ->check(CLI::IsMember({"http", "stdio"}))
      ->capture_default_str();
  serve_cmd->add_option("--host", serve.host, "HTTP bind address")->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "HTTP port (0 picks a free one)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUserError;
  }

  try {
    if (enhance_cmd->parsed()) return cmd_enhance(enhance);
    if (bench_cmd->parsed()) return cmd_bench(bench);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate);
    if (list_cmd->parsed()) return cmd_tools_list(tools_registry);
    if (describe_cmd->parsed()) return cmd_tools_describe(tools_registry, describe_name);
    if (serve_cmd->parsed()) return cmd_serve_stub(serve);
  } catch (const InputError& err) {
    return fail(kUserError, err.what());
  } catch (const std::exception& err) {
    return fail(kRuntimeError, err.what());
  }
  return kUserError;
}

}  // namespace aerialvp::cli

int main(int argc, char** argv) { return aerialvp::cli::run(argc, argv); }
