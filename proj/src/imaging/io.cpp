#include "ocsynth/imaging/io.hpp"

#include <cstdio>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace ocs::io {
namespace {

// OpenCV stores BGR(A); swap to RGB(A) by hand to avoid linking imgproc.
Image from_mat(const cv::Mat& raw, const std::string& what) {
  if (raw.empty()) fail(ErrorCode::kDecodeFailure, "cannot decode " + what);
  cv::Mat m = raw;
  if (m.depth() == CV_16U) m.convertTo(m, CV_8U, 1.0 / 257.0);
  if (m.depth() != CV_8U) fail(ErrorCode::kDecodeFailure, "unsupported sample depth in " + what);
  const int ch = m.channels();
  if (ch != 1 && ch != 3 && ch != 4) fail(ErrorCode::kDecodeFailure, "unsupported channel count in " + what);
  const int out_ch = ch == 1 ? 3 : ch;
  Image img(m.cols, m.rows, out_ch);
  for (int y = 0; y < m.rows; ++y) {
    const std::uint8_t* src = m.ptr<std::uint8_t>(y);
    std::uint8_t* dst = img.row(y);
    for (int x = 0; x < m.cols; ++x) {
      if (ch == 1) {
        dst[x * 3] = dst[x * 3 + 1] = dst[x * 3 + 2] = src[x];
      } else {
        dst[x * out_ch + 0] = src[x * ch + 2];
        dst[x * out_ch + 1] = src[x * ch + 1];
        dst[x * out_ch + 2] = src[x * ch + 0];
        if (ch == 4) dst[x * out_ch + 3] = src[x * ch + 3];
      }
    }
  }
  return img;
}

cv::Mat to_mat(const Image& img) {
  const int ch = img.channels();
  cv::Mat m(img.height(), img.width(), CV_8UC(ch));
  for (int y = 0; y < img.height(); ++y) {
    const std::uint8_t* src = img.row(y);
    std::uint8_t* dst = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width(); ++x) {
      if (ch == 1) {
        dst[x] = src[x];
      } else {
        dst[x * ch + 0] = src[x * ch + 2];
        dst[x * ch + 1] = src[x * ch + 1];
        dst[x * ch + 2] = src[x * ch + 0];
        if (ch == 4) dst[x * ch + 3] = src[x * ch + 3];
      }
    }
  }
  return m;
}

cv::Mat mask_mat(const Mask& mask) {
  cv::Mat m(mask.height(), mask.width(), CV_8UC1);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) m.at<std::uint8_t>(y, x) = mask.at(x, y) ? 255 : 0;
  }
  return m;
}

Mask mask_from_mat(const cv::Mat& m, const std::string& what) {
  if (m.empty()) fail(ErrorCode::kDecodeFailure, "cannot decode mask " + what);
  cv::Mat g = m;
  if (g.channels() != 1) fail(ErrorCode::kDecodeFailure, "mask must be single-channel: " + what);
  if (g.depth() == CV_16U) g.convertTo(g, CV_8U, 1.0 / 257.0);
  Mask out(g.cols, g.rows);
  for (int y = 0; y < g.rows; ++y) {
    for (int x = 0; x < g.cols; ++x) out.at(x, y) = g.at<std::uint8_t>(y, x) ? 1 : 0;
  }
  return out;
}

const std::vector<int> kPngParams{cv::IMWRITE_PNG_COMPRESSION, 1};

void write_mat(const std::filesystem::path& path, const cv::Mat& m) {
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", m, buf, kPngParams)) fail(ErrorCode::kIoFailure, "png encode failed");
  FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) fail(ErrorCode::kIoFailure, "cannot open " + path.string() + " for writing");
  const bool ok = std::fwrite(buf.data(), 1, buf.size(), f) == buf.size();
  std::fclose(f);
  if (!ok) fail(ErrorCode::kIoFailure, "short write to " + path.string());
}

cv::Mat read_mat(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kMissingAsset, path.string());
  return cv::imread(path.string(), cv::IMREAD_UNCHANGED);
}

}  // namespace

Image read_image(const std::filesystem::path& path) { return from_mat(read_mat(path), path.string()); }

Mask read_mask(const std::filesystem::path& path) { return mask_from_mat(read_mat(path), path.string()); }

DepthImage read_depth(const std::filesystem::path& path) {
  const cv::Mat m = read_mat(path);
  if (m.empty()) fail(ErrorCode::kDecodeFailure, "cannot decode depth " + path.string());
  if (m.type() != CV_16UC1) fail(ErrorCode::kDecodeFailure, "depth must be 16-bit single-channel: " + path.string());
  DepthImage d{m.cols, m.rows, std::vector<std::uint16_t>(static_cast<std::size_t>(m.cols) * m.rows)};
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) d.mm[static_cast<std::size_t>(y) * m.cols + x] = m.at<std::uint16_t>(y, x);
  }
  return d;
}

void write_png(const std::filesystem::path& path, const Image& img) { write_mat(path, to_mat(img)); }

void write_mask_png(const std::filesystem::path& path, const Mask& mask) { write_mat(path, mask_mat(mask)); }

void write_depth_png(const std::filesystem::path& path, const DepthImage& depth) {
  cv::Mat m(depth.height, depth.width, CV_16UC1);
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) m.at<std::uint16_t>(y, x) = depth.at(x, y);
  }
  write_mat(path, m);
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", to_mat(img), buf, kPngParams)) fail(ErrorCode::kIoFailure, "png encode failed");
  return buf;
}

std::vector<std::uint8_t> encode_mask_png(const Mask& mask) {
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", mask_mat(mask), buf, kPngParams)) fail(ErrorCode::kIoFailure, "png encode failed");
  return buf;
}

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) fail(ErrorCode::kDecodeFailure, "empty image buffer");
  const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  return from_mat(cv::imdecode(buf, cv::IMREAD_UNCHANGED), "in-memory image");
}

Mask decode_mask(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) fail(ErrorCode::kDecodeFailure, "empty mask buffer");
  const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  return mask_from_mat(cv::imdecode(buf, cv::IMREAD_GRAYSCALE), "in-memory mask");
}

std::pair<int, int> image_size(const std::filesystem::path& path) {
  const cv::Mat m = read_mat(path);
  if (m.empty()) fail(ErrorCode::kDecodeFailure, "cannot decode " + path.string());
  return {m.cols, m.rows};
}

}  // namespace ocs::io
