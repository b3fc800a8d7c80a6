// SPDX-License-Identifier: Apache-2.0
#include <charconv>
#include <cmath>

#include <json.hpp>

#include "common/error.hpp"
#include "common/io.hpp"
#include "neural/model.hpp"

namespace molswap::nn {

namespace {

constexpr std::string_view kFormat = "molswap-weights";

void append_float(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, static_cast<float>(v));
  out.append(buf, res.ptr);
}

ModelWeights template_for(ModelKind kind, Variant variant) {
  return kind == ModelKind::kDiffusion ? init_diffusion(variant, 0) : init_time(variant, 0);
}

}  // namespace

std::string weights_to_json(const ModelWeights& w) {
  std::string out;
  out.reserve(w.parameter_count() * 12 + 4096);
  out += "{\"format\":\"";
  out += kFormat;
  out += "\",\"version\":" + std::to_string(kWeightsVersion);
  out += ",\"kind\":\"" + std::string(kind_name(w.kind())) + "\"";
  out += ",\"variant\":\"" + std::string(variant_name(w.variant())) + "\"";
  out += ",\"tensors\":[";
  bool first = true;
  for (const auto& p : w.params()) {
    if (!first) out += ',';
    first = false;
    out += "\n{\"name\":\"" + p.name + "\",\"shape\":[" + std::to_string(p.value.rows()) + "," +
           std::to_string(p.value.cols()) + "],\"values\":[";
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        if (r || c) out += ',';
        append_float(out, p.value(r, c));
      }
    }
    out += "]}";
  }
  out += "\n]}\n";
  return out;
}

ModelWeights weights_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCorruptFile, std::string("weights file is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != kFormat) {
      fail(ErrorCode::kCorruptFile, "not a molswap weights file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kWeightsVersion) {
      fail(ErrorCode::kVersionMismatch, "weights version " + std::to_string(version) + ", expected " +
                                            std::to_string(kWeightsVersion));
    }
    const auto kind_s = doc.at("kind").get<std::string>();
    const auto variant_s = doc.at("variant").get<std::string>();
    ModelKind kind;
    Variant variant;
    if (kind_s == "diffusion") {
      kind = ModelKind::kDiffusion;
    } else if (kind_s == "time") {
      kind = ModelKind::kTime;
    } else {
      fail(ErrorCode::kCorruptFile, "unknown model kind '" + kind_s + "'");
    }
    if (variant_s == "BASE") {
      variant = Variant::kBase;
    } else if (variant_s == "FPS") {
      variant = Variant::kFps;
    } else {
      fail(ErrorCode::kCorruptFile, "unknown variant '" + variant_s + "'");
    }
    ModelWeights w = template_for(kind, variant);
    const auto& tensors = doc.at("tensors");
    if (!tensors.is_array() || tensors.size() != w.params().size()) {
      fail(ErrorCode::kCorruptFile, "weights file has " + std::to_string(tensors.size()) + " tensors, expected " +
                                        std::to_string(w.params().size()));
    }
    for (const auto& t : tensors) {
      const auto name = t.at("name").get<std::string>();
      if (!w.has(name)) fail(ErrorCode::kCorruptFile, "unexpected tensor " + name);
      Param& p = w.at(name);
      const auto& shape = t.at("shape");
      if (shape.size() != 2 || shape[0].get<Eigen::Index>() != p.value.rows() ||
          shape[1].get<Eigen::Index>() != p.value.cols()) {
        fail(ErrorCode::kCorruptFile, "tensor " + name + " has the wrong shape");
      }
      const auto& values = t.at("values");
      if (!values.is_array() || static_cast<Eigen::Index>(values.size()) != p.value.size()) {
        fail(ErrorCode::kCorruptFile, "tensor " + name + " has the wrong number of values");
      }
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
        for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
          const auto& v = values[k++];
          if (!v.is_number()) fail(ErrorCode::kCorruptFile, "tensor " + name + " holds a non-number");
          const double d = static_cast<double>(static_cast<float>(v.get<double>()));
          if (!std::isfinite(d)) fail(ErrorCode::kCorruptFile, "tensor " + name + " holds a non-finite value");
          p.value(r, c) = d;
        }
      }
    }
    return w;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCorruptFile, std::string("malformed weights file: ") + e.what());
  }
}

void save_weights(const ModelWeights& w, const std::filesystem::path& path) {
  io::write_file_atomic(path, weights_to_json(w));
}

ModelWeights load_weights(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::kCorruptFile, e.what());
  }
  return weights_from_json(text);
}

ModelWeights load_weights(const std::filesystem::path& path, ModelKind kind, Variant variant) {
  ModelWeights w = load_weights(path);
  if (w.kind() != kind || w.variant() != variant) {
    fail(ErrorCode::kVersionMismatch, "expected " + std::string(kind_name(kind)) + "/" +
                                          std::string(variant_name(variant)) + " weights, file holds " +
                                          std::string(kind_name(w.kind())) + "/" +
                                          std::string(variant_name(w.variant())));
  }
  return w;
}

}  // namespace molswap::nn
