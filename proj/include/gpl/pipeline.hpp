#pragma once

// Batch commands behind the `gpl` command-line tool. Each command reads its
// inputs, computes everything in memory and only then writes outputs.

#include <gpl/core.hpp>
#include <gpl/ellipse_fit.hpp>
#include <gpl/gradcheck.hpp>
#include <gpl/heatmap.hpp>
#include <gpl/io.hpp>
#include <gpl/losses.hpp>
#include <gpl/metrics.hpp>
#include <gpl/parallel.hpp>
#include <gpl/phantom.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gpl::pipeline {

namespace fs = std::filesystem;

struct FitOutput {
  std::vector<EllipseRecord> records;
  std::vector<std::string> warnings;
};

/// Fits every non-empty slice. Empty slices produce no record.
inline FitOutput fit_volume(const MaskVolume& masks, std::size_t workers = worker_count()) {
  const std::size_t depth = masks.depth();
  std::vector<std::optional<EllipseParams>> fitted(depth);
  std::vector<std::string> slice_warning(depth);
  parallel_for(
      depth,
      [&](std::size_t z) {
        const auto slice = masks.slice_image(z);
        if (count_foreground(slice.data()) == 0) return;
        if (const auto parts = count_components(slice); parts > 1) {
          slice_warning[z] = "slice " + std::to_string(z) + ": mask has " + std::to_string(parts) +
                             " 8-connected components; fitting their union";
        }
        try {
          fitted[z] = fit_ellipse(slice);
        } catch (const Error& e) {
          throw Error(e.code(), "slice " + std::to_string(z) + ": " + e.what());
        }
      },
      workers);
  FitOutput out;
  for (std::size_t z = 0; z < depth; ++z) {
    if (!slice_warning[z].empty()) out.warnings.push_back(slice_warning[z]);
    if (fitted[z]) out.records.push_back({z, *fitted[z]});
  }
  return out;
}

inline FitOutput cmd_fit(const fs::path& mask_dir, const fs::path& out_csv) {
  auto out = fit_volume(io::read_mask_stack(mask_dir));
  io::write_ellipse_csv(out.records, out_csv);
  return out;
}

inline std::vector<std::string> cmd_heatmap(const fs::path& in_csv, std::size_t depth, std::size_t n,
                                            const fs::path& out_f32v) {
  auto csv = io::read_ellipse_csv(in_csv);
  const auto vol = stack_heatmaps(csv.records, depth, n);
  io::write_f32v(vol, out_f32v);
  return std::move(csv.warnings);
}

/// Fit followed by heatmap synthesis for a square mask stack.
inline FitOutput cmd_pseudo(const fs::path& mask_dir, const fs::path& out_f32v) {
  const auto masks = io::read_mask_stack(mask_dir);
  if (masks.width() != masks.height()) {
    throw Error(ErrorCode::InvalidSize, "pseudo labels need square slices, got " + std::to_string(masks.width()) +
                                            "x" + std::to_string(masks.height()));
  }
  auto out = fit_volume(masks);
  io::write_f32v(stack_heatmaps(out.records, masks.depth(), masks.width()), out_f32v);
  return out;
}

inline void cmd_threshold(const fs::path& in_f32v, double t, const fs::path& out_dir) {
  const auto vol = io::read_f32v(in_f32v);
  validate_volume(vol, VolumeKind::Heatmap);
  io::write_mask_stack(threshold(vol, t), out_dir);
}

struct NamedVolume {
  std::string id;
  MaskVolume volume;
};

/// A directory holding .pgm slices is one case named after the directory;
/// otherwise each subdirectory is a case, in lexicographic order.
inline std::vector<NamedVolume> read_cases(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::UnreadableFile, dir.string() + " is not a directory");
  if (!io::list_slices(dir).empty()) {
    const auto name = fs::absolute(dir).lexically_normal();
    auto id = name.filename().string();
    if (id.empty()) id = name.parent_path().filename().string();
    return {{id, io::read_mask_stack(dir)}};
  }
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) subdirs.push_back(entry.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  if (subdirs.empty()) throw Error(ErrorCode::UnreadableFile, dir.string() + " contains no slices or case directories");
  std::vector<NamedVolume> out;
  for (const auto& s : subdirs) out.push_back({s.filename().string(), io::read_mask_stack(s)});
  return out;
}

/// Pairs cases by id; the order follows `reference`.
inline std::vector<std::pair<const NamedVolume*, const NamedVolume*>> match_cases(
    const std::vector<NamedVolume>& reference, const std::vector<NamedVolume>& other) {
  if (reference.size() != other.size()) {
    throw Error(ErrorCode::LengthMismatch, "case counts differ: " + std::to_string(reference.size()) + " vs " +
                                               std::to_string(other.size()));
  }
  std::vector<std::pair<const NamedVolume*, const NamedVolume*>> out;
  if (reference.size() == 1) return {{&reference[0], &other[0]}};
  for (const auto& r : reference) {
    const auto it = std::find_if(other.begin(), other.end(), [&](const NamedVolume& o) { return o.id == r.id; });
    if (it == other.end()) throw Error(ErrorCode::LengthMismatch, "case '" + r.id + "' has no counterpart");
    out.push_back({&r, &*it});
  }
  return out;
}

inline nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline std::string eval_report_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["cases"] = nlohmann::ordered_json::array();
  for (const auto& c : report.per_case) {
    nlohmann::ordered_json item;
    item["id"] = c.case_id;
    item["dsc"] = c.dsc;
    item["sen"] = optional_json(c.sen);
    item["hd"] = optional_json(c.hd);
    item["vs"] = optional_json(c.vs);
    doc["cases"].push_back(std::move(item));
  }
  auto stat = [](const MeanStd& m) {
    return m.count > 0 ? std::pair(nlohmann::ordered_json(m.mean), nlohmann::ordered_json(m.std))
                       : std::pair(nlohmann::ordered_json(nullptr), nlohmann::ordered_json(nullptr));
  };
  auto& agg = doc["aggregate"];
  std::tie(agg["dsc_mean"], agg["dsc_std"]) = stat(report.dsc);
  std::tie(agg["sen_mean"], agg["sen_std"]) = stat(report.sen);
  std::tie(agg["hd_mean"], agg["hd_std"]) = stat(report.hd);
  std::tie(agg["vs_mean"], agg["vs_std"]) = stat(report.vs);
  return doc.dump(2) + "\n";
}

inline EvalReport cmd_eval(const fs::path& pred_dir, const fs::path& gt_dir, const Spacing& spacing,
                           const fs::path& out_json) {
  const auto gt = read_cases(gt_dir);
  const auto pred = read_cases(pred_dir);
  const auto pairs = match_cases(gt, pred);
  std::vector<CaseMetrics> cases(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    cases[i] = evaluate_case(pairs[i].first->id, pairs[i].second->volume, pairs[i].first->volume, spacing);
  });
  auto report = aggregate(std::move(cases));
  io::write_file_atomic(out_json, eval_report_json(report));
  return report;
}

inline LossValue cmd_loss(const fs::path& pred_f32v, const fs::path& target_f32v, LossMode mode,
                          const LossWeights& weights) {
  const auto pred = io::read_f32v(pred_f32v);
  const auto target = io::read_f32v(target_f32v);
  return combined_loss(target, pred, weights, mode).value;
}

/// `total=... dist=... rec=...` with 9 significant digits.
inline std::string format_loss(const LossValue& v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "total=%.9g dist=%.9g rec=%.9g", v.total, v.distribution_term,
                v.reconstruction_term);
  return buf;
}

struct VariabilityOutput {
  std::vector<std::string> ids;
  std::vector<double> per_case;
  MeanStd summary;
};

inline std::string variability_json(const VariabilityOutput& v) {
  nlohmann::ordered_json doc;
  doc["cases"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < v.ids.size(); ++i) {
    doc["cases"].push_back(nlohmann::ordered_json{{"id", v.ids[i]}, {"dice", v.per_case[i]}});
  }
  doc["dice_mean"] = v.summary.mean;
  doc["dice_std"] = v.summary.std;
  return doc.dump(2) + "\n";
}

inline VariabilityOutput cmd_variability(const fs::path& dir_a, const fs::path& dir_b, const fs::path& out_json) {
  const auto a = read_cases(dir_a);
  const auto b = read_cases(dir_b);
  const auto pairs = match_cases(a, b);
  std::vector<MaskVolume> va, vb;
  VariabilityOutput out;
  for (const auto& [x, y] : pairs) {
    out.ids.push_back(x->id);
    va.push_back(x->volume);
    vb.push_back(y->volume);
  }
  out.summary = variability(va, vb, &out.per_case);
  io::write_file_atomic(out_json, variability_json(out));
  return out;
}

struct PhantomOutputs {
  std::optional<fs::path> masks_dir;
  std::optional<fs::path> csv;
  std::optional<fs::path> heatmap;
};

inline Phantom cmd_phantom(const PhantomSpec& spec, const PhantomOutputs& outputs) {
  auto phantom = generate_phantom(spec);
  if (outputs.csv) io::write_ellipse_csv(phantom.records, *outputs.csv);
  if (outputs.heatmap) io::write_f32v(phantom.pseudo, *outputs.heatmap);
  if (outputs.masks_dir) io::write_mask_stack(phantom.strong, *outputs.masks_dir);
  return phantom;
}

}  // namespace gpl::pipeline
