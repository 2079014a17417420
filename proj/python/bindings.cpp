// Python bindings for the aerialvp core. JSON-shaped values cross the
// boundary as strings; the aerialvp package decodes them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "aerialvp/config.hpp"
#include "aerialvp/engine.hpp"
#include "aerialvp/error.hpp"
#include "aerialvp/eval.hpp"
#include "aerialvp/geometry.hpp"
#include "aerialvp/prompt.hpp"
#include "aerialvp/stub_server.hpp"
#include "aerialvp/tool_repository.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace aerialvp {
namespace {

json parse_json_arg(const std::string& text, const char* what) {
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) throw InputError(std::string(what) + " is not valid JSON");
  return value;
}

EnhancementKind kind_arg(const std::string& text) {
  auto kind = parse_enhancement_kind(text);
  if (!kind) throw InputError("unknown enhancement kind \"" + text + "\"");
  return *kind;
}

TaskType task_arg(const std::string& text) {
  if (auto t = task_from_code(text)) return *t;
  if (auto t = parse_task_type(text)) return *t;
  throw InputError("unknown task type \"" + text + "\"");
}

ToolCategory category_arg(const std::string& text) {
  auto c = parse_tool_category(text);
  if (!c) throw InputError("unknown tool category \"" + text + "\"");
  return *c;
}

std::vector<std::string> kind_names(const EnhancementPlan& plan) {
  std::vector<std::string> out;
  for (auto k : plan) out.emplace_back(tool_prefix(k));
  return out;
}

AnalysisResult analysis_arg(const std::string& task, const std::vector<std::string>& objects,
                            const std::optional<std::vector<std::string>>& plan) {
  AnalysisResult a;
  a.task_type = task_arg(task);
  a.objects = ObjectSet(objects);
  if (plan) {
    for (const auto& k : *plan) a.plan.push_back(kind_arg(k));
  } else {
    a.plan = default_plan(a.task_type);
  }
  return a;
}

/// Engine plus the registry and client it borrows, built from a config file.
class Session {
 public:
  explicit Session(const std::filesystem::path& config_path) : config_(AppConfig::load(config_path)) {
    registry_ = build_registry(config_, client_);
    selector_ = make_selector(config_);
    engine_ = std::make_unique<TaskEngine>(registry_.registry, client_, selector_.get(), engine_options(config_));
  }

  std::pair<std::string, std::string> enhance(const std::string& prompt, const std::string& image, int width,
                                              int height) {
    py::gil_scoped_release release;
    const TaskImage img{std::filesystem::path(image).stem().string(), width, height, image};
    auto out = engine_->enhance(TaskPrompt(prompt), img);
    return {out.text, to_json(out.provenance).dump()};
  }

  std::vector<std::string> tool_names() const {
    std::vector<std::string> out;
    for (const auto& t : registry_.registry.list()) out.push_back(t.name);
    return out;
  }

  std::vector<std::string> run_bench(const std::filesystem::path& dataset, const std::filesystem::path& out_dir,
                                     const std::string& task, bool baseline) {
    py::gil_scoped_release release;
    auto run = run_config(config_);
    run.dataset_path = dataset;
    if (task != "all") run.task_filter = task_arg(task);
    if (baseline) run.switches = kBaselineSwitches;
    auto vlm = make_vlm(config_);
    if (run.model.empty()) run.model = vlm->name();
    const auto all = load_dataset(dataset);
    const auto samples = filter_samples(all, run.task_filter);
    if (samples.empty()) throw InputError("no samples left after filtering");
    BenchmarkContext ctx{engine_.get(), vlm.get(), nullptr};
    const auto report = run_benchmark(run, samples, ctx);
    write_report(report, out_dir);
    return summary_rows(report);
  }

 private:
  AppConfig config_;
  McpClient client_;
  LoadedRegistry registry_;
  std::unique_ptr<ChatBackend> selector_;
  std::unique_ptr<TaskEngine> engine_;
};

/// An HTTP-hosted stub server built from a manifest string.
class StubService {
 public:
  StubService(const std::string& manifest, const std::string& host, int port)
      : host_(std::make_shared<const StubToolServer>(
                  StubToolServer::from_manifest(parse_json_arg(manifest, "manifest"))),
              host, port) {}
  std::string url() const { return host_.url(); }
  void stop() { host_.stop(); }

 private:
  HttpStubHost host_;
};

}  // namespace
}  // namespace aerialvp

PYBIND11_MODULE(_aerialvp, m) {
  using namespace aerialvp;
  m.doc() = "UAV prompt enhancement core";

  static py::exception<Error> base_error(m, "AerialvpError", PyExc_RuntimeError);
  static py::exception<InputError> input_error(m, "InputError", base_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError& e) {
      py::set_error(input_error, e.what());
    } catch (const Error& e) {
      py::set_error(base_error, e.what());
    }
  });

  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init([](double x1, double y1, double x2, double y2) {
             BoundingBox b{x1, y1, x2, y2};
             validate(b);
             return b;
           }),
           py::arg("x1"), py::arg("y1"), py::arg("x2"), py::arg("y2"))
      .def_readonly("x1", &BoundingBox::x1)
      .def_readonly("y1", &BoundingBox::y1)
      .def_readonly("x2", &BoundingBox::x2)
      .def_readonly("y2", &BoundingBox::y2)
      .def_property_readonly("area", &BoundingBox::area)
      .def("as_tuple", [](const BoundingBox& b) { return py::make_tuple(b.x1, b.y1, b.x2, b.y2); })
      .def("__eq__", [](const BoundingBox& a, const BoundingBox& b) { return a == b; })
      .def("__repr__", [](const BoundingBox& b) { return "BoundingBox" + to_string(b); });

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def("clamp_to_image", &clamp_to_image, py::arg("box"), py::arg("width"), py::arg("height"));
  m.def(
      "grounding_metrics",
      [](const std::vector<std::pair<std::optional<BoundingBox>, BoundingBox>>& pairs, double beta) {
        std::vector<GroundingPair> in;
        for (const auto& [pred, gold] : pairs) in.push_back({pred, gold});
        const auto r = grounding_metrics(in, beta);
        return py::dict(py::arg("accuracy") = r.accuracy, py::arg("mean_iou") = r.mean_iou,
                        py::arg("n") = r.n, py::arg("empty") = r.empty);
      },
      py::arg("pairs"), py::arg("beta") = kDefaultIouThreshold);
  m.def(
      "grounding_metrics_from_ious",
      [](const std::vector<double>& ious, double beta) {
        const auto r = grounding_metrics_from_ious(ious, beta);
        return py::dict(py::arg("accuracy") = r.accuracy, py::arg("mean_iou") = r.mean_iou,
                        py::arg("n") = r.n, py::arg("empty") = r.empty);
      },
      py::arg("ious"), py::arg("beta") = kDefaultIouThreshold);

  m.def("default_plan", [](const std::string& task) { return kind_names(default_plan(task_arg(task))); },
        py::arg("task"));
  m.def("parse_task_type", [](const std::string& text) -> std::optional<std::string> {
    auto t = parse_task_type(text);
    if (!t) return std::nullopt;
    return std::string(display_name(*t));
  });
  m.def(
      "fuse_prompt",
      [](const std::string& task, const std::vector<std::string>& objects, const std::string& instruction,
         const std::map<std::string, std::string>& blocks, const std::optional<std::vector<std::string>>& plan,
         std::size_t block_char_cap) {
        const auto analysis = analysis_arg(task, objects, plan);
        EnhancementBundle bundle;
        for (const auto& [kind, text] : blocks) {
          const auto k = kind_arg(kind);
          bundle.blocks[k] = EnhancementBlock{std::string(tool_prefix(k)), text};
        }
        FusionOptions options;
        options.block_char_cap = block_char_cap;
        auto out = fuse_prompt(analysis, instruction, bundle, options);
        return std::make_pair(out.text, to_json(out.provenance).dump());
      },
      py::arg("task"), py::arg("objects"), py::arg("instruction"), py::arg("blocks") = std::map<std::string, std::string>{},
      py::arg("plan") = py::none(), py::arg("block_char_cap") = 0);

  m.def("parse_vg_answer", &parse_vg_answer, py::arg("text"), py::arg("width"), py::arg("height"));
  m.def("parse_vr_answer", &parse_vr_answer, py::arg("text"));
  m.def(
      "parse_vqa_answer",
      [](const std::string& text, const std::vector<std::pair<std::string, std::string>>& options) {
        std::vector<VqaOption> opts;
        for (const auto& [letter, body] : options) opts.push_back({letter, body});
        return parse_vqa_answer(text, opts);
      },
      py::arg("text"), py::arg("options"));
  m.def(
      "load_dataset",
      [](const std::filesystem::path& path) {
        py::list out;
        for (const auto& s : load_dataset(path)) {
          out.append(py::dict(py::arg("id") = s.id, py::arg("task") = std::string(task_code(s.task)),
                              py::arg("image") = s.image.reference, py::arg("width") = s.image.width,
                              py::arg("height") = s.image.height, py::arg("instruction") = s.instruction));
        }
        return out;
      },
      py::arg("path"));

  py::class_<ToolRegistry>(m, "ToolRegistry")
      .def(py::init<>())
      .def(
          "add",
          [](ToolRegistry& r, const std::string& name, const std::string& description, const std::string& address,
             const std::string& transport) {
            Endpoint ep{parse_endpoint_kind(transport), address};
            const auto category = category_of_tool_name(name);
            if (!category) throw RegistryError("tool name \"" + name + "\" carries no known category prefix");
            r.add(make_descriptor(name, description, default_input_schema(*category), ep));
          },
          py::arg("name"), py::arg("description") = "", py::arg("address") = "http://127.0.0.1:0/mcp",
          py::arg("transport") = "http")
      .def("remove", [](ToolRegistry& r, const std::string& name) { return r.remove(name); })
      .def("screen_candidates",
           [](const ToolRegistry& r, const std::string& category) {
             std::vector<std::string> out;
             for (const auto& t : r.screen_candidates(category_arg(category))) out.push_back(t.name);
             return out;
           })
      .def("names",
           [](const ToolRegistry& r) {
             std::vector<std::string> out;
             for (const auto& t : r.list()) out.push_back(t.name);
             return out;
           })
      .def("__len__", &ToolRegistry::size);

  py::class_<StubService>(m, "StubServer")
      .def(py::init<const std::string&, const std::string&, int>(), py::arg("manifest"),
           py::arg("host") = "127.0.0.1", py::arg("port") = 0)
      .def_property_readonly("url", &StubService::url)
      .def("stop", &StubService::stop);

  py::class_<McpClient>(m, "McpClient")
      .def(py::init<>())
      .def(
          "list_tools",
          [](McpClient& c, const std::string& address, const std::string& transport) {
            py::gil_scoped_release release;
            std::vector<std::string> out;
            for (const auto& t : c.list_remote_tools(Endpoint{parse_endpoint_kind(transport), address})) {
              out.push_back(t.name);
            }
            return out;
          },
          py::arg("address"), py::arg("transport") = "http")
      .def(
          "call_tool",
          [](McpClient& c, const std::string& address, const std::string& name, const std::string& arguments,
             const std::string& transport) {
            const auto args = parse_json_arg(arguments, "arguments");
            py::gil_scoped_release release;
            const Endpoint ep{parse_endpoint_kind(transport), address};
            std::optional<ToolDescriptor> tool;
            for (auto& t : c.list_remote_tools(ep)) {
              if (t.name == name) tool = std::move(t);
            }
            if (!tool) throw InputError("endpoint has no tool named \"" + name + "\"");
            const auto r = c.call_tool(*tool, args);
            json detections = json::array();
            for (const auto& d : r.detections) {
              detections.push_back({{"label", d.label},
                                    {"box", {d.box.x1, d.box.y1, d.box.x2, d.box.y2}},
                                    {"confidence", d.confidence}});
            }
            return json{{"ok", r.ok}, {"text", r.text}, {"error", r.error}, {"detections", detections}}.dump();
          },
          py::arg("address"), py::arg("name"), py::arg("arguments") = "{}", py::arg("transport") = "http")
      .def_property_readonly("messages_sent", &McpClient::messages_sent);

  py::class_<Session>(m, "Session")
      .def(py::init<const std::filesystem::path&>(), py::arg("config"))
      .def("enhance", &Session::enhance, py::arg("prompt"), py::arg("image"), py::arg("width"), py::arg("height"))
      .def("tool_names", &Session::tool_names)
      .def("bench", &Session::run_bench, py::arg("dataset"), py::arg("out_dir"), py::arg("task") = "all",
           py::arg("baseline") = false);
}
