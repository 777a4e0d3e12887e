#include "conv_engine.hpp"

#include <Eigen/Core>
#include <algorithm>

#include "tslab/errors.hpp"

namespace tslab::detail {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;

}  // namespace

ConvEngine::ConvEngine(const DenoiserModel& model, int height, int width, int batch)
    : model_(model), height_(height), width_(width), batch_(batch) {
  if (height <= 0 || width <= 0 || batch <= 0)
    throw ArgumentError("ConvEngine: image and batch dimensions must be positive");
  model.validate();
  columns_ = static_cast<std::size_t>(batch) * height * width;
  const std::size_t layers = model.layers.size();
  inputs_.resize(layers);
  cols_.resize(layers);
  pre_.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& layer = model.layers[l];
    inputs_[l].resize(static_cast<std::size_t>(layer.in_channels) * columns_);
    cols_[l].resize(static_cast<std::size_t>(layer.in_channels) * 9 * columns_);
    pre_[l].resize(static_cast<std::size_t>(layer.out_channels) * columns_);
  }
}

void ConvEngine::im2col(const std::vector<double>& act, int channels,
                        std::vector<double>& cols) const {
  const int h = height_;
  const int w = width_;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < channels; ++c) {
    for (int k = 0; k < 9; ++k) {
      const int dy = k / 3 - 1;
      const int dx = k % 3 - 1;
      double* row = cols.data() + (static_cast<std::size_t>(c) * 9 + k) * columns_;
      const double* src_channel = act.data() + static_cast<std::size_t>(c) * columns_;
      for (int b = 0; b < batch_; ++b) {
        const double* src = src_channel + b * hw;
        double* dst = row + b * hw;
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          double* out = dst + static_cast<std::size_t>(y) * w;
          if (sy < 0 || sy >= h) {
            std::fill(out, out + w, 0.0);
            continue;
          }
          const double* in = src + static_cast<std::size_t>(sy) * w;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          for (int x = 0; x < x0; ++x) out[x] = 0.0;
          for (int x = x0; x < x1; ++x) out[x] = in[x + dx];
          for (int x = x1; x < w; ++x) out[x] = 0.0;
        }
      }
    }
  }
}

void ConvEngine::col2im(const std::vector<double>& cols, int channels,
                        std::vector<double>& act) const {
  const int h = height_;
  const int w = width_;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::fill(act.begin(), act.begin() + static_cast<std::ptrdiff_t>(channels * columns_), 0.0);
  for (int c = 0; c < channels; ++c) {
    for (int k = 0; k < 9; ++k) {
      const int dy = k / 3 - 1;
      const int dx = k % 3 - 1;
      const double* row = cols.data() + (static_cast<std::size_t>(c) * 9 + k) * columns_;
      double* dst_channel = act.data() + static_cast<std::size_t>(c) * columns_;
      for (int b = 0; b < batch_; ++b) {
        const double* src = row + b * hw;
        double* dst = dst_channel + b * hw;
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          const double* in = src + static_cast<std::size_t>(y) * w;
          double* out = dst + static_cast<std::size_t>(sy) * w;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          for (int x = x0; x < x1; ++x) out[x + dx] += in[x];
        }
      }
    }
  }
}

void ConvEngine::forward(std::span<const double> input) {
  if (input.size() != columns_) throw ArgumentError("ConvEngine::forward: input size mismatch");
  std::copy(input.begin(), input.end(), inputs_[0].begin());
  const std::size_t layers = model_.layers.size();
  const auto cols = static_cast<Eigen::Index>(columns_);
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& layer = model_.layers[l];
    im2col(inputs_[l], layer.in_channels, cols_[l]);
    ConstMatrixMap weights(layer.weights.data(), layer.out_channels, layer.in_channels * 9);
    ConstMatrixMap patches(cols_[l].data(), layer.in_channels * 9, cols);
    MatrixMap out(pre_[l].data(), layer.out_channels, cols);
    out.noalias() = weights * patches;
    out.colwise() += ConstVectorMap(layer.bias.data(), layer.out_channels);
    if (l + 1 < layers) {
      auto& next = inputs_[l + 1];
      std::transform(pre_[l].begin(), pre_[l].end(), next.begin(),
                     [](double v) { return v > 0.0 ? v : 0.0; });
    }
  }
}

void ConvEngine::backward(std::span<const double> dpred, ModelGradient* grad,
                          std::span<double> dinput) {
  if (dpred.size() != columns_) throw ArgumentError("ConvEngine::backward: gradient size mismatch");
  if (!dinput.empty() && dinput.size() != columns_)
    throw ArgumentError("ConvEngine::backward: input gradient size mismatch");
  const auto cols = static_cast<Eigen::Index>(columns_);
  dpre_.assign(dpred.begin(), dpred.end());
  for (std::size_t li = model_.layers.size(); li-- > 0;) {
    const auto& layer = model_.layers[li];
    ConstMatrixMap dout(dpre_.data(), layer.out_channels, cols);
    if (grad != nullptr) {
      auto& g = grad->layers[li];
      ConstMatrixMap patches(cols_[li].data(), layer.in_channels * 9, cols);
      MatrixMap dw(g.weights.data(), layer.out_channels, layer.in_channels * 9);
      dw.noalias() += dout * patches.transpose();
      VectorMap(g.bias.data(), layer.out_channels) += dout.rowwise().sum();
    }
    if (li == 0 && dinput.empty()) break;
    dcols_.resize(static_cast<std::size_t>(layer.in_channels) * 9 * columns_);
    ConstMatrixMap weights(layer.weights.data(), layer.out_channels, layer.in_channels * 9);
    MatrixMap dpatches(dcols_.data(), layer.in_channels * 9, cols);
    dpatches.noalias() = weights.transpose() * dout;
    dact_.resize(static_cast<std::size_t>(layer.in_channels) * columns_);
    col2im(dcols_, layer.in_channels, dact_);
    if (li == 0) {
      std::copy(dact_.begin(), dact_.end(), dinput.begin());
      break;
    }
    // ReLU between layer li-1 and li.
    const auto& pre = pre_[li - 1];
    dpre_.resize(dact_.size());
    for (std::size_t i = 0; i < dact_.size(); ++i) dpre_[i] = pre[i] > 0.0 ? dact_[i] : 0.0;
  }
}

}  // namespace tslab::detail
