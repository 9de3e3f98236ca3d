#include "vpr/prompting.hpp"

#include "vpr/error.hpp"

#ifdef VPR_HAVE_OPENCV
#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#endif

namespace vpr {

#ifdef VPR_HAVE_OPENCV

std::string downscale_image(const std::string& bytes, const std::string& media_type, int max_side) {
  if (max_side <= 0) return bytes;
  const cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8U, const_cast<char*>(bytes.data()));
  cv::Mat image = cv::imdecode(raw, cv::IMREAD_UNCHANGED);
  if (image.empty()) throw Error(ErrorCode::ImageCodecError, "cannot decode " + media_type + " image");

  const int longest = std::max(image.cols, image.rows);
  if (longest <= max_side) return bytes;

  const double scale = static_cast<double>(max_side) / longest;
  const cv::Size size(std::max(1, static_cast<int>(std::lround(image.cols * scale))),
                      std::max(1, static_cast<int>(std::lround(image.rows * scale))));
  cv::Mat resized;
  cv::resize(image, resized, size, 0, 0, cv::INTER_AREA);

  const std::string ext = media_type == "image/png" ? ".png" : media_type == "image/webp" ? ".webp" : ".jpg";
  std::vector<unsigned char> encoded;
  if (!cv::imencode(ext, resized, encoded)) throw Error(ErrorCode::ImageCodecError, "cannot encode " + ext);
  return {encoded.begin(), encoded.end()};
}

#else

std::string downscale_image(const std::string& bytes, const std::string&, int max_side) {
  if (max_side <= 0) return bytes;
  throw Error(ErrorCode::InvalidConfig, "image downscaling needs a build with OpenCV (VPR_WITH_OPENCV)");
}

#endif

}  // namespace vpr
