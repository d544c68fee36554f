#include "support/oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <opencv2/imgproc.hpp>

namespace oracle {

std::pair<std::size_t, std::size_t> overlap_and_area(std::span<const ocs::Mask> masks) {
  std::size_t overlap = 0, area = 0;
  if (masks.empty()) return {0, 0};
  const int w = masks[0].width(), h = masks[0].height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int n = 0;
      for (const auto& m : masks) n += m.at(x, y) ? 1 : 0;
      area += n;
      if (n >= 2) ++overlap;
    }
  }
  return {overlap, area};
}

double occlusion(std::span<const ocs::Mask> masks) {
  const auto [o, a] = overlap_and_area(masks);
  return static_cast<double>(o) / static_cast<double>(a);
}

std::map<std::pair<int, int>, double> dense_poisson(const ocs::Image& bg, const ocs::Cutout& cutout, int x, int y,
                                                    int channel) {
  const int W = bg.width(), H = bg.height();
  auto unknown = [&](int fx, int fy) {
    if (fx < 0 || fy < 0 || fx >= W || fy >= H) return false;
    const int cx = fx - x, cy = fy - y;
    return cx >= 0 && cy >= 0 && cx < cutout.mask.width() && cy < cutout.mask.height() && cutout.mask.at(cx, cy);
  };
  std::map<std::pair<int, int>, int> index;
  std::vector<std::pair<int, int>> pix;
  for (int fy = 0; fy < H; ++fy) {
    for (int fx = 0; fx < W; ++fx) {
      if (unknown(fx, fy)) {
        index[{fx, fy}] = static_cast<int>(pix.size());
        pix.push_back({fx, fy});
      }
    }
  }
  const int n = static_cast<int>(pix.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  auto src = [&](int fx, int fy) { return static_cast<double>(cutout.image.at(fx - x, fy - y, channel)); };
  const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
  for (int i = 0; i < n; ++i) {
    const auto [px, py] = pix[i];
    A(i, i) = 4.0;
    for (int k = 0; k < 4; ++k) {
      const int qx = px + dx[k], qy = py + dy[k];
      if (unknown(qx, qy)) {
        A(i, index[{qx, qy}]) -= 1.0;
        b(i) += src(px, py) - src(qx, qy);
      } else {
        b(i) += bg.at(std::clamp(qx, 0, W - 1), std::clamp(qy, 0, H - 1), channel);
      }
    }
  }
  const Eigen::VectorXd sol = A.partialPivLu().solve(b);
  std::map<std::pair<int, int>, double> out;
  for (int i = 0; i < n; ++i) out[pix[i]] = sol(i);
  return out;
}

ocs::Mask reference_canny(const ocs::Image& img, const ocs::CannyParams& params) {
  cv::Mat rgb(img.height(), img.width(), CV_8UC3, const_cast<std::uint8_t*>(img.data().data()));
  cv::Mat gray, grayf, smooth, dx, dy, dx16, dy16, edges;
  cv::cvtColor(rgb, gray, cv::COLOR_RGB2GRAY);
  gray.convertTo(grayf, CV_32F);
  const int r = static_cast<int>(std::ceil(3.0 * params.sigma));
  cv::GaussianBlur(grayf, smooth, cv::Size(2 * r + 1, 2 * r + 1), params.sigma, params.sigma, cv::BORDER_REPLICATE);
  cv::Sobel(smooth, dx, CV_32F, 1, 0, 3, 1.0, 0.0, cv::BORDER_REPLICATE);
  cv::Sobel(smooth, dy, CV_32F, 0, 1, 3, 1.0, 0.0, cv::BORDER_REPLICATE);
  dx.convertTo(dx16, CV_16S);
  dy.convertTo(dy16, CV_16S);
  cv::Canny(dx16, dy16, edges, params.low, params.high, true);
  ocs::Mask out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.at(x, y) = edges.at<std::uint8_t>(y, x) ? 1 : 0;
  }
  return out;
}

bool pasted_box(const ocs::Mask& mask, int x, int y, int width, int height, IntBox& out) {
  bool any = false;
  out = {width, height, 0, 0};
  for (int my = 0; my < mask.height(); ++my) {
    for (int mx = 0; mx < mask.width(); ++mx) {
      if (!mask.at(mx, my)) continue;
      const int fx = mx + x, fy = my + y;
      if (fx < 0 || fy < 0 || fx >= width || fy >= height) continue;
      any = true;
      out.x0 = std::min(out.x0, fx);
      out.y0 = std::min(out.y0, fy);
      out.x1 = std::max(out.x1, fx + 1);
      out.y1 = std::max(out.y1, fy + 1);
    }
  }
  return any;
}

namespace {

std::vector<ocs::Mask> frame_masks(const ocs::LayoutSpec& layout, const std::vector<ocs::Cutout>& transformed) {
  std::vector<ocs::Mask> masks;
  for (std::size_t i = 0; i < transformed.size(); ++i) {
    ocs::Mask m(layout.width, layout.height);
    const auto& c = transformed[i];
    const auto& p = layout.placements[i];
    for (int y = 0; y < c.mask.height(); ++y)
      for (int x = 0; x < c.mask.width(); ++x)
        if (c.mask.at(x, y) && m.contains(x + p.x, y + p.y)) m.at(x + p.x, y + p.y) = 1;
    masks.push_back(std::move(m));
  }
  return masks;
}

}  // namespace

std::vector<OverlayObject> overlay_layout(const ocs::LayoutSpec& layout, const std::vector<ocs::Cutout>& transformed) {
  const auto masks = frame_masks(layout, transformed);
  std::vector<OverlayObject> out(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    std::size_t visible = 0;
    for (int y = 0; y < layout.height; ++y) {
      for (int x = 0; x < layout.width; ++x) {
        if (!masks[i].at(x, y)) continue;
        bool hidden = false;
        for (std::size_t j = i + 1; j < masks.size() && !hidden; ++j) hidden = masks[j].at(x, y);
        visible += !hidden;
      }
    }
    std::size_t area = 0;
    for (auto v : transformed[i].mask.data()) area += v;
    out[i].occlusion = 1.0 - static_cast<double>(visible) / static_cast<double>(area);
    out[i].has_box = pasted_box(transformed[i].mask, layout.placements[i].x, layout.placements[i].y, layout.width,
                                layout.height, out[i].box);
  }
  return out;
}

double overlay_frame_occlusion(const ocs::LayoutSpec& layout, const std::vector<ocs::Cutout>& transformed) {
  return occlusion(frame_masks(layout, transformed));
}

}  // namespace oracle
