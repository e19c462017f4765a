// gpl: Gaussian pseudo-label toolkit command-line interface.

#include <gpl/pipeline.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIO = 3;
constexpr int kExitNumeric = 4;

constexpr const char* kFooter = R"(Exit codes:
  0  success
  2  usage error (bad flags or arguments)
  3  I/O error (unreadable or malformed file, failed write)
  4  numeric or degenerate-input error (e.g. no ellipse fits a mask)

Environment:
  GPL_THREADS  caps the number of worker threads (default: all cores))";

int exit_code_for(gpl::ErrorCode code) {
  switch (gpl::error_class(code)) {
    case gpl::ErrorClass::Usage: return kExitUsage;
    case gpl::ErrorClass::IO: return kExitIO;
    case gpl::ErrorClass::Numeric: return kExitNumeric;
  }
  return kExitNumeric;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  namespace pl = gpl::pipeline;

  CLI::App app{"Gaussian pseudo labels from ellipse annotations: fitting, heatmaps, losses and metrics", "gpl"};
  app.footer(kFooter);
  app.require_subcommand(1);

  std::string mask_dir, out_path, in_path, pred, target, gt_dir, dir_a, dir_b;

  auto* fit = app.add_subcommand("fit", "Fit one ellipse per slice of a PGM mask stack and write a CSV");
  fit->add_option("--masks", mask_dir, "Directory of P5 PGM slices")->required();
  fit->add_option("--out", out_path, "Output ellipse CSV")->required();

  std::size_t depth = 0, size = 256;
  auto* heatmap = app.add_subcommand("heatmap", "Render an ellipse CSV into an F32V heatmap volume");
  heatmap->add_option("--csv", in_path, "Input ellipse CSV")->required();
  heatmap->add_option("--depth", depth, "Number of slices")->required()->check(CLI::PositiveNumber);
  heatmap->add_option("--size", size, "Slice side length in pixels")->capture_default_str();
  heatmap->add_option("--out", out_path, "Output F32V file")->required();

  auto* pseudo = app.add_subcommand("pseudo", "Fit ellipses to a mask stack and render the pseudo-label volume");
  pseudo->add_option("--masks", mask_dir, "Directory of P5 PGM slices")->required();
  pseudo->add_option("--out", out_path, "Output F32V file")->required();

  double t = 0.5;
  auto* thresh = app.add_subcommand("threshold", "Binarize an F32V heatmap (value > t) into a PGM mask stack");
  thresh->add_option("--in", in_path, "Input F32V heatmap")->required();
  thresh->add_option("-t,--threshold", t, "Threshold in (0, 1)")->capture_default_str();
  thresh->add_option("--out", out_path, "Output directory")->required();

  std::vector<double> spacing{1.0, 1.0, 1.0};
  auto* eval = app.add_subcommand("eval", "Compute DSC, SEN, HD and VS of predicted mask stacks");
  eval->add_option("--pred", pred, "Predicted mask stack, or directory of case stacks")->required();
  eval->add_option("--gt", gt_dir, "Ground-truth mask stack, or directory of case stacks")->required();
  eval->add_option("--spacing", spacing, "Voxel spacing sx sy sz")->expected(3)->capture_default_str();
  eval->add_option("--out", out_path, "Output JSON report")->required();

  std::string dist = "kl";
  double w1 = 1.0, w2 = 1.0;
  auto* loss = app.add_subcommand("loss", "Evaluate the weighted distribution + reconstruction loss");
  loss->add_option("--pred", pred, "Prediction F32V")->required();
  loss->add_option("--target", target, "Pseudo-label F32V")->required();
  loss->add_option("--dist", dist, "Distribution term: kl (per slice) or wass (3-D)")
      ->check(CLI::IsMember({"kl", "wass"}))
      ->capture_default_str();
  loss->add_option("--w1", w1, "Weight of the distribution term")->capture_default_str();
  loss->add_option("--w2", w2, "Weight of the reconstruction term")->capture_default_str();

  std::uint64_t seed = 0;
  std::size_t seeds = 1;
  auto* gradcheck = app.add_subcommand("gradcheck", "Check analytic loss gradients against finite differences");
  gradcheck->add_option("--seed", seed, "First random seed")->capture_default_str();
  gradcheck->add_option("--seeds", seeds, "Number of consecutive seeds")->capture_default_str();

  auto* var = app.add_subcommand("variability", "Mean and sample std of per-case Dice between two label sets");
  var->add_option("--a", dir_a, "First label set")->required();
  var->add_option("--b", dir_b, "Second label set")->required();
  var->add_option("--out", out_path, "Output JSON")->required();

  gpl::PhantomSpec spec;
  double bulge_factor = 0.0;
  std::vector<std::size_t> bulge_slices;
  std::string out_masks, out_csv, out_heatmap;
  auto* phantom = app.add_subcommand("phantom", "Generate a synthetic ellipse phantom");
  phantom->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
  phantom->add_option("--depth", spec.depth, "Number of slices")->capture_default_str();
  phantom->add_option("--size", spec.size, "Slice side length in pixels")->capture_default_str();
  phantom->add_option("--drift", spec.drift, "Maximum center drift per slice, px")->capture_default_str();
  phantom->add_option("--axis-min", spec.axis_min, "Smallest semi-axis, px")->capture_default_str();
  phantom->add_option("--axis-max", spec.axis_max, "Largest semi-axis, px")->capture_default_str();
  phantom->add_option("--max-axis-ratio", spec.max_axis_ratio, "Upper bound on semi_minor / semi_major")
      ->capture_default_str();
  phantom->add_option("--bulge-factor", bulge_factor, "Axis dilation of the aneurysm slices (0 = none)");
  phantom->add_option("--bulge-slices", bulge_slices, "First and last aneurysm slice")->expected(2);
  phantom->add_option("--perturbation", spec.perturbation, "Strong-mask boundary perturbation, px")
      ->capture_default_str();
  phantom->add_option("--out-masks", out_masks, "Output directory for the strong masks");
  phantom->add_option("--out-csv", out_csv, "Output ellipse CSV");
  phantom->add_option("--out-heatmap", out_heatmap, "Output F32V pseudo-label volume");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "gpl: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*fit) {
      const auto out = pl::cmd_fit(mask_dir, out_path);
      print_warnings(out.warnings);
    } else if (*heatmap) {
      print_warnings(pl::cmd_heatmap(in_path, depth, size, out_path));
    } else if (*pseudo) {
      const auto out = pl::cmd_pseudo(mask_dir, out_path);
      print_warnings(out.warnings);
    } else if (*thresh) {
      pl::cmd_threshold(in_path, t, out_path);
    } else if (*eval) {
      pl::cmd_eval(pred, gt_dir, gpl::Spacing{spacing[0], spacing[1], spacing[2]}, out_path);
    } else if (*loss) {
      const auto mode = dist == "kl" ? gpl::LossMode::KL2D : gpl::LossMode::Wasserstein3D;
      std::cout << pl::format_loss(pl::cmd_loss(pred, target, mode, gpl::LossWeights{w1, w2})) << "\n";
    } else if (*gradcheck) {
      constexpr double kTolerance = 1e-4;
      bool ok = true;
      for (std::size_t i = 0; i < seeds; ++i) {
        const auto r = gpl::run_gradient_checks(seed + i);
        std::printf("seed=%llu kl=%.3e wass=%.3e mae=%.3e\n", static_cast<unsigned long long>(seed + i),
                    r.kl.max_relative_error, r.wasserstein.max_relative_error, r.mae.max_relative_error);
        ok = ok && r.kl.max_relative_error <= kTolerance && r.wasserstein.max_relative_error <= kTolerance &&
             r.mae.max_relative_error <= kTolerance;
      }
      if (!ok) {
        std::cerr << "gpl: gradient check exceeded relative error " << kTolerance << "\n";
        return kExitNumeric;
      }
    } else if (*var) {
      const auto out = pl::cmd_variability(dir_a, dir_b, out_path);
      std::printf("dice=%.4f+-%.4f\n", out.summary.mean, out.summary.std);
    } else if (*phantom) {
      if (bulge_factor > 0.0) {
        if (bulge_slices.size() != 2) {
          std::cerr << "gpl: --bulge-factor requires --bulge-slices FIRST LAST\n";
          return kExitUsage;
        }
        spec.bulge = gpl::AneurysmBulge{bulge_factor, bulge_slices[0], bulge_slices[1]};
      }
      if (out_masks.empty() && out_csv.empty() && out_heatmap.empty()) {
        std::cerr << "gpl: phantom needs at least one of --out-masks, --out-csv, --out-heatmap\n";
        return kExitUsage;
      }
      pl::PhantomOutputs outputs;
      if (!out_masks.empty()) outputs.masks_dir = out_masks;
      if (!out_csv.empty()) outputs.csv = out_csv;
      if (!out_heatmap.empty()) outputs.heatmap = out_heatmap;
      pl::cmd_phantom(spec, outputs);
    }
  } catch (const gpl::Error& e) {
    std::cerr << "gpl: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "gpl: " << e.what() << "\n";
    return kExitIO;
  } catch (const std::exception& e) {
    std::cerr << "gpl: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
