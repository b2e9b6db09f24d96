#include "fingereye/imaging/deconvolution.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fingereye::imaging {

namespace {

cv::Mat dft(const cv::Mat& real) {
  cv::Mat spectrum;
  cv::dft(real, spectrum, cv::DFT_COMPLEX_OUTPUT);
  return spectrum;
}

cv::Mat idft_real(const cv::Mat& spectrum) {
  cv::Mat real;
  cv::dft(spectrum, real, cv::DFT_INVERSE | cv::DFT_REAL_OUTPUT | cv::DFT_SCALE);
  return real;
}

// Kernel embedded in an image-sized array with its center at the origin.
cv::Mat psf_spectrum(const Psf& h, cv::Size size) {
  cv::Mat padded = cv::Mat::zeros(size, CV_64F);
  const int r = h.kernel.rows / 2;
  const int c = h.kernel.cols / 2;
  for (int i = 0; i < h.kernel.rows; ++i) {
    for (int j = 0; j < h.kernel.cols; ++j) {
      const int y = ((i - r) % size.height + size.height) % size.height;
      const int x = ((j - c) % size.width + size.width) % size.width;
      padded.at<double>(y, x) += h.kernel.at<double>(i, j);
    }
  }
  return dft(padded);
}

cv::Mat apply_spectrum(const cv::Mat& x, const cv::Mat& spectrum, bool conjugate) {
  cv::Mat prod;
  cv::mulSpectrums(dft(x), spectrum, prod, 0, conjugate);
  return idft_real(prod);
}

// Forward differences with wrap-around, and their adjoints.
cv::Mat diff_x(const cv::Mat& x) {
  cv::Mat out(x.size(), CV_64F);
  for (int r = 0; r < x.rows; ++r) {
    const double* p = x.ptr<double>(r);
    double* o = out.ptr<double>(r);
    for (int c = 0; c < x.cols; ++c) o[c] = p[(c + 1) % x.cols] - p[c];
  }
  return out;
}

cv::Mat diff_y(const cv::Mat& x) {
  cv::Mat out(x.size(), CV_64F);
  for (int r = 0; r < x.rows; ++r) {
    const double* p = x.ptr<double>(r);
    const double* n = x.ptr<double>((r + 1) % x.rows);
    double* o = out.ptr<double>(r);
    for (int c = 0; c < x.cols; ++c) o[c] = n[c] - p[c];
  }
  return out;
}

cv::Mat diff_x_adjoint(const cv::Mat& v) {
  cv::Mat out(v.size(), CV_64F);
  for (int r = 0; r < v.rows; ++r) {
    const double* p = v.ptr<double>(r);
    double* o = out.ptr<double>(r);
    for (int c = 0; c < v.cols; ++c) o[c] = p[(c - 1 + v.cols) % v.cols] - p[c];
  }
  return out;
}

cv::Mat diff_y_adjoint(const cv::Mat& v) {
  cv::Mat out(v.size(), CV_64F);
  for (int r = 0; r < v.rows; ++r) {
    const double* p = v.ptr<double>(r);
    const double* q = v.ptr<double>((r - 1 + v.rows) % v.rows);
    double* o = out.ptr<double>(r);
    for (int c = 0; c < v.cols; ++c) o[c] = q[c] - p[c];
  }
  return out;
}

double prior(const cv::Mat& x, const DeconvConfig& cfg) {
  const cv::Mat gx = diff_x(x), gy = diff_y(x);
  double total = 0.0;
  const double half_a = cfg.a / 2.0;
  for (int r = 0; r < x.rows; ++r) {
    const double* px = gx.ptr<double>(r);
    const double* py = gy.ptr<double>(r);
    for (int c = 0; c < x.cols; ++c) {
      total += std::pow(px[c] * px[c] + cfg.gradientSmoothing, half_a) +
               std::pow(py[c] * py[c] + cfg.gradientSmoothing, half_a);
    }
  }
  return total;
}

double objective_with_spectrum(const cv::Mat& x, const cv::Mat& hs, const cv::Mat& g,
                               const DeconvConfig& cfg) {
  const cv::Mat residual = apply_spectrum(x, hs, false) - g;
  return cfg.lambda * residual.dot(residual) + prior(x, cfg);
}

// IRLS weights of the quadratic majorizer at x.
void irls_weights(const cv::Mat& x, const DeconvConfig& cfg, cv::Mat& wx, cv::Mat& wy) {
  const cv::Mat gx = diff_x(x), gy = diff_y(x);
  wx.create(x.size(), CV_64F);
  wy.create(x.size(), CV_64F);
  const double e = cfg.a / 2.0 - 1.0;
  for (int r = 0; r < x.rows; ++r) {
    for (int c = 0; c < x.cols; ++c) {
      const double tx = gx.at<double>(r, c), ty = gy.at<double>(r, c);
      wx.at<double>(r, c) = cfg.a / 2.0 * std::pow(tx * tx + cfg.gradientSmoothing, e);
      wy.at<double>(r, c) = cfg.a / 2.0 * std::pow(ty * ty + cfg.gradientSmoothing, e);
    }
  }
}

// Minimizes the majorizer by conjugate gradients from x (warm start).
cv::Mat x_update(const cv::Mat& x0, const cv::Mat& hs, const cv::Mat& g, const DeconvConfig& cfg) {
  cv::Mat wx, wy;
  irls_weights(x0, cfg, wx, wy);
  cv::Mat hth;
  cv::mulSpectrums(hs, hs, hth, 0, true);

  auto apply = [&](const cv::Mat& v) {
    cv::Mat out = cfg.lambda * apply_spectrum(v, hth, false);
    out += diff_x_adjoint(wx.mul(diff_x(v)));
    out += diff_y_adjoint(wy.mul(diff_y(v)));
    return out;
  };

  const cv::Mat b = cfg.lambda * apply_spectrum(g, hs, true);
  cv::Mat x = x0.clone();
  cv::Mat r = b - apply(x);
  cv::Mat p = r.clone();
  double rr = r.dot(r);
  const double stop = 1e-20 * std::max(1.0, b.dot(b));
  for (int it = 0; it < cfg.xSolverIterations && rr > stop; ++it) {
    const cv::Mat ap = apply(p);
    const double pap = p.dot(ap);
    if (pap <= 0.0) break;
    const double alpha = rr / pap;
    x += alpha * p;
    r -= alpha * ap;
    const double rr_new = r.dot(r);
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return x;
}

// Euclidean projection onto {h >= 0, sum h = 1}.
void project_simplex(std::vector<double>& v) {
  std::vector<double> u(v);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    cumulative += u[i];
    const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  for (double& e : v) e = std::max(0.0, e - theta);
}

// Projected gradient on the kernel; the data term in h is the quadratic
// h^T A h - 2 c^T h with A the autocorrelation of x and c its correlation
// with g, both read off FFTs.
Psf h_update(const cv::Mat& x, const Psf& h0, const cv::Mat& g, const DeconvConfig& cfg) {
  const int k = h0.kernel.rows;
  const int rad = k / 2;
  const int n = k * k;
  const cv::Mat xs = dft(x);
  cv::Mat auto_spec, cross_spec;
  cv::mulSpectrums(xs, xs, auto_spec, 0, true);
  cv::mulSpectrums(dft(g), xs, cross_spec, 0, true);
  const cv::Mat rxx = idft_real(auto_spec);
  const cv::Mat rxg = idft_real(cross_spec);

  auto wrap = [&](int v, int size) { return ((v % size) + size) % size; };
  cv::Mat A(n, n, CV_64F);
  std::vector<double> c(n);
  for (int i = 0; i < n; ++i) {
    const int qy = i / k - rad, qx = i % k - rad;
    c[i] = rxg.at<double>(wrap(qy, g.rows), wrap(qx, g.cols));
    for (int j = 0; j < n; ++j) {
      const int sy = j / k - rad - qy, sx = j % k - rad - qx;
      A.at<double>(i, j) = rxx.at<double>(wrap(sy, x.rows), wrap(sx, x.cols));
    }
  }
  cv::Mat eigenvalues;
  cv::eigen(A, eigenvalues);
  const double lipschitz = std::max(eigenvalues.at<double>(0), 1e-12);
  const double step = 1.0 / lipschitz;

  std::vector<double> h(n);
  for (int i = 0; i < n; ++i) h[i] = h0.kernel.at<double>(i / k, i % k);
  std::vector<double> grad(n);
  for (int it = 0; it < cfg.hSolverIterations; ++it) {
    double change = 0.0;
    for (int i = 0; i < n; ++i) {
      const double* row = A.ptr<double>(i);
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += row[j] * h[j];
      grad[i] = s - c[i];
    }
    std::vector<double> next(n);
    for (int i = 0; i < n; ++i) next[i] = h[i] - step * grad[i];
    project_simplex(next);
    for (int i = 0; i < n; ++i) change = std::max(change, std::abs(next[i] - h[i]));
    h.swap(next);
    if (change < 1e-12) break;
  }

  Psf out;
  out.kernel.create(k, k, CV_64F);
  for (int i = 0; i < n; ++i) out.kernel.at<double>(i / k, i % k) = h[i];
  return out;
}

}  // namespace

Psf Psf::delta(int size) {
  if (size < 1 || size % 2 == 0) throw Error(ErrorCode::InvalidArgument, "PSF size must be odd");
  Psf p;
  p.kernel = cv::Mat::zeros(size, size, CV_64F);
  p.kernel.at<double>(size / 2, size / 2) = 1.0;
  return p;
}

Psf Psf::gaussian(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw Error(ErrorCode::InvalidArgument, "PSF size must be odd");
  if (!(sigma > 0.0)) return delta(size);
  Psf p;
  p.kernel.create(size, size, CV_64F);
  const int r = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double v = std::exp(-((i - r) * (i - r) + (j - r) * (j - r)) / (2.0 * sigma * sigma));
      p.kernel.at<double>(i, j) = v;
      sum += v;
    }
  }
  p.kernel /= sum;
  return p;
}

void Psf::validate() const {
  if (kernel.empty() || kernel.type() != CV_64FC1 || kernel.rows % 2 == 0 || kernel.cols % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "PSF must be an odd-sized CV_64F raster");
  }
  double minv;
  cv::minMaxLoc(kernel, &minv);
  if (minv < 0.0) throw Error(ErrorCode::InvalidArgument, "PSF has negative entries");
  if (std::abs(cv::sum(kernel)[0] - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "PSF does not sum to one");
  }
}

void DeconvConfig::validate() const {
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
  if (!(a > 0.0 && a <= 1.0)) throw Error(ErrorCode::InvalidArgument, "a must lie in (0, 1]");
  if (maxIterations < 1) throw Error(ErrorCode::InvalidArgument, "maxIterations must be positive");
  if (!(convergenceTol > 0.0)) throw Error(ErrorCode::InvalidArgument, "convergenceTol must be positive");
  if (kernelSize < 1 || kernelSize % 2 == 0) throw Error(ErrorCode::InvalidArgument, "kernelSize must be odd");
  if (!(gradientSmoothing > 0.0)) throw Error(ErrorCode::InvalidArgument, "gradientSmoothing must be positive");
}

cv::Mat convolve_circular(const cv::Mat& x, const Psf& h) {
  return apply_spectrum(x, psf_spectrum(h, x.size()), false);
}

double deconv_objective(const cv::Mat& x, const Psf& h, const cv::Mat& g, const DeconvConfig& cfg) {
  return objective_with_spectrum(x, psf_spectrum(h, x.size()), g, cfg);
}

DeconvResult blind_deconvolve(const Frame& frame, const DeconvConfig& cfg) {
  cfg.validate();
  if (frame.empty() || frame.image.channels() != 1) {
    throw Error(ErrorCode::InvalidArgument, "blind deconvolution needs a grayscale frame");
  }
  cv::Mat g;
  frame.image.convertTo(g, CV_64F, frame.image.depth() == CV_8U ? 1.0 / 255.0 : 1.0);

  DeconvResult result;
  cv::Mat x = g.clone();
  Psf h = cfg.initialPsfSigma > 0.0 ? Psf::gaussian(cfg.kernelSize, cfg.initialPsfSigma)
                                    : Psf::delta(cfg.kernelSize);
  cv::Mat hs = psf_spectrum(h, g.size());
  double current = objective_with_spectrum(x, hs, g, cfg);
  result.objective.push_back(current);

  for (int it = 0; it < cfg.maxIterations; ++it) {
    const double before = current;

    cv::Mat x_new = x_update(x, hs, g, cfg);
    const double after_x = objective_with_spectrum(x_new, hs, g, cfg);
    if (after_x <= current) {
      x = x_new;
      current = after_x;
    }
    result.objective.push_back(current);

    Psf h_new = h_update(x, h, g, cfg);
    const cv::Mat hs_new = psf_spectrum(h_new, g.size());
    const double after_h = objective_with_spectrum(x, hs_new, g, cfg);
    if (after_h <= current) {
      h = h_new;
      hs = hs_new;
      current = after_h;
    }
    result.objective.push_back(current);
    result.iterations = it + 1;

    if (before - current <= cfg.convergenceTol * std::abs(before)) {
      result.converged = true;
      break;
    }
  }

  // Renormalize against accumulated rounding.
  h.kernel /= cv::sum(h.kernel)[0];
  result.psf = h;
  cv::Mat out;
  x.convertTo(out, CV_8U, 255.0);
  result.image = Frame(out, frame.timestamp);
  return result;
}

}  // namespace fingereye::imaging
