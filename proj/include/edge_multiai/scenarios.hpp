#pragma once

#include <string>
#include <vector>

#include "core.hpp"

namespace edge_multiai {

/// Five benchmarked applications with FP32/FP16/INT8 variants (sizes and
/// accuracies as measured on the reference models). Load times are
/// 1.5 ms/MB and inference times 1/12 of the load time.
inline std::vector<ApplicationSpec> bundled_applications() {
  struct Row {
    const char* label;
    double size_mb, accuracy_pct, load_ms, infer_ms;
  };
  auto app = [](const char* id, const char* name, std::vector<Row> rows) {
    ApplicationSpec a{AppId(id), name, {}};
    for (const auto& r : rows) a.zoo.push_back({a.app_id, r.label, r.size_mb, r.accuracy_pct, r.load_ms, r.infer_ms});
    return a;
  };
  return {
      app("face_recognition", "Face recognition (VGG-Face)",
          {{"FP32", 535.1, 90.2, 802.65, 66.8875},
           {"FP16", 378.8, 82.5, 568.2, 47.35},
           {"INT8", 144.2, 71.8, 216.3, 18.025}}),
      app("image_classification", "Image classification (VIT-base-patch16)",
          {{"FP32", 346.4, 94.5, 519.6, 43.3},
           {"FP16", 242.2, 81.3, 363.3, 30.275},
           {"INT8", 106.7, 72.2, 160.05, 13.3375}}),
      app("speech_recognition", "Speech recognition (S2T-librispeech)",
          {{"FP32", 285.2, 89.7, 427.8, 35.65},
           {"FP16", 228.0, 77.2, 342.0, 28.5},
           {"INT8", 78.4, 68.0, 117.6, 9.8}}),
      app("sentence_prediction", "Next sentence prediction (Paraphrase-MiniLM-L12-v2)",
          {{"FP32", 471.3, 88.2, 706.95, 58.9125},
           {"FP16", 377.6, 81.7, 566.4, 47.2},
           {"INT8", 98.9, 76.2, 148.35, 12.3625}}),
      app("text_classification", "Text classification (Roberta-base)",
          {{"FP32", 499.0, 91.1, 748.5, 62.375},
           {"FP16", 392.2, 82.4, 588.3, 49.025},
           {"INT8", 132.3, 76.6, 198.45, 16.5375}}),
  };
}

/// Built-in defaults: the bundled zoo on a 1024 MB edge budget.
inline ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.applications = bundled_applications();
  cfg.memory_budget_mb = 1024.0;
  cfg.policy = PolicyKind::IWSBFE;
  cfg.deviation = 0.3;
  cfg.mean_concurrency = 3.0;
  cfg.horizon_ms = 3.6e6;
  cfg.requests_per_app = 100;
  cfg.alpha = 0.0;
  cfg.seed = 1;
  return cfg;
}

}  // namespace edge_multiai
