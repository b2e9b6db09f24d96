#pragma once

#include "fingereye/common.hpp"

#include <vector>

namespace fingereye::imaging {

/// Point spread function: odd-sized, non-negative, unit sum.
struct Psf {
  cv::Mat kernel;  // CV_64FC1

  static Psf delta(int size);
  static Psf gaussian(int size, double sigma);
  void validate() const;
};

struct DeconvConfig {
  double lambda = 2000.0;      // data weight on [0,1]-scaled intensities
  double a = 0.8;              // hyper-Laplacian exponent, in (0, 1]
  int maxIterations = 30;
  double convergenceTol = 1e-4;  // relative objective change
  int kernelSize = 7;          // odd PSF support
  /// 0 starts from a delta PSF; otherwise from a Gaussian of this sigma.
  /// A delta start is a fixed point of the h-step on blurred input, so the
  /// default starts wide.
  double initialPsfSigma = 1.5;
  int xSolverIterations = 30;  // conjugate-gradient steps per x update
  int hSolverIterations = 300;  // projected-gradient steps per h update
  double gradientSmoothing = 1e-6;  // epsilon in (|grad|^2 + eps)^(a/2)

  void validate() const;
};

struct DeconvResult {
  Frame image;
  Psf psf;
  /// Objective after initialization and after every x and h update.
  std::vector<double> objective;
  int iterations = 0;
  bool converged = false;
};

/// Objective lambda*||h (*) x - g||^2 + sum |dx x|^a + |dy x|^a with circular
/// boundaries and the smoothing epsilon from `cfg`. x and g are CV_64F in [0,1].
double deconv_objective(const cv::Mat& x, const Psf& h, const cv::Mat& g, const DeconvConfig& cfg);

/// Circular convolution h (*) x (h centered).
cv::Mat convolve_circular(const cv::Mat& x, const Psf& h);

/// MAP blind deconvolution by alternating minimization. x-updates use
/// iteratively reweighted least squares (a majorizer of the prior) solved by
/// warm-started conjugate gradients; h-updates run projected gradient on the
/// probability simplex. Every update is accepted only if it does not raise
/// the objective, so the recorded sequence is non-increasing. Running out of
/// iterations is reported through `converged`, not thrown.
DeconvResult blind_deconvolve(const Frame& frame, const DeconvConfig& cfg = {});

}  // namespace fingereye::imaging
