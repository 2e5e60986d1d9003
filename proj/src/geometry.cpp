#include "trajex/geometry.hpp"

#include "trajex/errors.hpp"

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>

namespace trajex {

namespace {

constexpr double kSingularTol = 1e-12;

bool collinear(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
               double scale) {
  const Eigen::Vector2d ab = b - a;
  const Eigen::Vector2d ac = c - a;
  return std::abs(ab.x() * ac.y() - ab.y() * ac.x()) <= 1e-9 * scale * scale;
}

double extent(const std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>>& pairs) {
  double s = 0.0;
  for (const auto& [src, dst] : pairs) {
    (void)dst;
    for (const auto& [other, unused] : pairs) {
      (void)unused;
      s = std::max(s, (src - other).norm());
    }
  }
  return s;
}

void check_duplicates(const CorrespondenceSet& c) {
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    for (std::size_t j = i + 1; j < c.pairs.size(); ++j) {
      if ((c.pairs[i].first - c.pairs[j].first).norm() == 0.0) {
        throw DegenerateConfiguration("duplicate source point in correspondence set");
      }
    }
  }
}

// Hartley normalization: centroid to the origin, mean distance sqrt(2).
Eigen::Matrix3d normalizer(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (mean_dist <= 0.0) throw DegenerateConfiguration("all points coincide");
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return t;
}

}  // namespace

std::string_view to_string(Frame frame) {
  switch (frame) {
    case Frame::Image: return "Image";
    case Frame::Road: return "Road";
    case Frame::Setup: return "Setup";
    case Frame::Map: return "Map";
  }
  return "?";
}

Frame frame_from_string(std::string_view name) {
  std::string lower(name);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "image") return Frame::Image;
  if (lower == "road") return Frame::Road;
  if (lower == "setup") return Frame::Setup;
  if (lower == "map") return Frame::Map;
  throw UnknownFrame("unknown frame '" + std::string(name) + "'");
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

bool BoundingBox::valid() const {
  return std::isfinite(p1.u) && std::isfinite(p1.v) && std::isfinite(p2.u) &&
         std::isfinite(p2.v) && p1.u < p2.u && p1.v < p2.v;
}

Homography::Homography(const Eigen::Matrix3d& h, Frame source, Frame target)
    : h_(h), source_(source), target_(target) {
  if (!h.allFinite()) throw DegenerateConfiguration("homography has non-finite entries");
  if (std::abs(h(2, 2)) < kSingularTol) {
    throw DegenerateConfiguration("homography cannot be normalized (h22 == 0)");
  }
  h_ /= h(2, 2);
  if (std::abs(h_.determinant()) <= kSingularTol) {
    throw DegenerateConfiguration("homography is singular");
  }
}

Homography Homography::inverse() const { return Homography(h_.inverse(), target_, source_); }

Eigen::Vector2d Homography::map(const Eigen::Vector2d& p) const {
  const Eigen::Vector3d q = h_ * p.homogeneous();
  if (std::abs(q.z()) < kSingularTol) throw PointAtInfinity("point maps to infinity");
  return q.hnormalized();
}

FrameTransform FrameTransform::identity(Frame source, Frame target) {
  FrameTransform t;
  t.source = source;
  t.target = target;
  return t;
}

Eigen::Matrix2d FrameTransform::linear() const {
  return scale * Eigen::Rotation2Dd(rotation).toRotationMatrix();
}

Eigen::Vector2d FrameTransform::apply(const Eigen::Vector2d& p) const {
  return linear() * p + translation;
}

Eigen::Vector2d FrameTransform::apply_vector(const Eigen::Vector2d& v) const {
  return linear() * v;
}

PlanePoint FrameTransform::apply(const PlanePoint& p) const {
  if (p.frame != source) {
    throw UnknownFrame("point is in frame " + std::string(to_string(p.frame)) +
                       ", transform expects " + std::string(to_string(source)));
  }
  const Eigen::Vector2d q = apply(p.vec());
  return {q.x(), q.y(), target};
}

FrameTransform FrameTransform::inverse() const {
  FrameTransform inv;
  inv.rotation = wrap_angle(-rotation);
  inv.scale = 1.0 / scale;
  inv.translation = -(inv.linear() * translation);
  inv.source = target;
  inv.target = source;
  return inv;
}

FrameTransform FrameTransform::after(const FrameTransform& first) const {
  if (first.target != source) {
    throw UnknownFrame("cannot chain " + std::string(to_string(first.target)) + " into " +
                       std::string(to_string(source)));
  }
  FrameTransform out;
  out.rotation = wrap_angle(rotation + first.rotation);
  out.scale = scale * first.scale;
  out.translation = linear() * first.translation + translation;
  out.source = first.source;
  out.target = target;
  return out;
}

CorrespondenceSet correspondences_from_json(std::string_view text) {
  CorrespondenceSet set;
  try {
    const auto doc = nlohmann::json::parse(text);
    set.source_frame = frame_from_string(doc.at("source_frame").get<std::string>());
    set.target_frame = frame_from_string(doc.at("target_frame").get<std::string>());
    for (const auto& pair : doc.at("pairs")) {
      const auto& s = pair.at(0);
      const auto& t = pair.at(1);
      set.pairs.emplace_back(Eigen::Vector2d(s.at(0).get<double>(), s.at(1).get<double>()),
                             Eigen::Vector2d(t.at(0).get<double>(), t.at(1).get<double>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("correspondence set: ") + e.what());
  }
  return set;
}

std::string correspondences_to_json(const CorrespondenceSet& set) {
  nlohmann::json doc;
  doc["source_frame"] = std::string(to_string(set.source_frame));
  doc["target_frame"] = std::string(to_string(set.target_frame));
  auto pairs = nlohmann::json::array();
  for (const auto& [s, t] : set.pairs) {
    pairs.push_back({{s.x(), s.y()}, {t.x(), t.y()}});
  }
  doc["pairs"] = std::move(pairs);
  return doc.dump(2);
}

Homography estimate_homography(const CorrespondenceSet& c) {
  if (c.pairs.size() < 4) {
    throw TooFewCorrespondences("homography needs at least 4 correspondences, got " +
                                std::to_string(c.pairs.size()));
  }
  check_duplicates(c);
  const double scale = extent(c.pairs);
  const std::size_t n = c.pairs.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        if (collinear(c.pairs[i].first, c.pairs[j].first, c.pairs[k].first, scale)) {
          throw DegenerateConfiguration("three collinear source points");
        }
      }
    }
  }

  std::vector<Eigen::Vector2d> src, dst;
  src.reserve(n);
  dst.reserve(n);
  for (const auto& [s, t] : c.pairs) {
    src.push_back(s);
    dst.push_back(t);
  }
  const Eigen::Matrix3d ts = normalizer(src);
  const Eigen::Matrix3d td = normalizer(dst);

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d p = (ts * src[i].homogeneous()).hnormalized();
    const Eigen::Vector2d q = (td * dst[i].homogeneous()).hnormalized();
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << -p.x(), -p.y(), -1, 0, 0, 0, q.x() * p.x(), q.x() * p.y(), q.x();
    a.row(r + 1) << 0, 0, 0, -p.x(), -p.y(), -1, q.y() * p.x(), q.y() * p.y(), q.y();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd hv = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
  const Eigen::Matrix3d h = td.inverse() * hn * ts;
  return Homography(h, c.source_frame, c.target_frame);
}

PlanePoint apply_homography(const Homography& h, const ImagePoint& p) {
  const Eigen::Vector2d q = h.map({p.u, p.v});
  return {q.x(), q.y(), h.target()};
}

ImagePoint project_to_image(const Homography& h, const PlanePoint& road) {
  const Eigen::Vector2d q = h.inverse().map(road.vec());
  return {q.x(), q.y()};
}

FrameTransform estimate_frame_transform(const CorrespondenceSet& c) {
  if (c.pairs.size() < 2) {
    throw TooFewCorrespondences("frame transform needs at least 2 correspondences");
  }
  const auto n = static_cast<Eigen::Index>(c.pairs.size());
  Eigen::Matrix2Xd src(2, n), dst(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = c.pairs[static_cast<std::size_t>(i)].first;
    dst.col(i) = c.pairs[static_cast<std::size_t>(i)].second;
  }
  const Eigen::Vector2d mean = src.rowwise().mean();
  if ((src.colwise() - mean).norm() == 0.0) {
    throw DegenerateConfiguration("all source points identical");
  }
  const Eigen::Matrix3d m = Eigen::umeyama(src, dst, true);
  FrameTransform t;
  const Eigen::Matrix2d lin = m.topLeftCorner<2, 2>();
  t.scale = lin.col(0).norm();
  t.rotation = std::atan2(lin(1, 0), lin(0, 0));
  t.translation = m.topRightCorner<2, 1>();
  t.source = c.source_frame;
  t.target = c.target_frame;
  if (!(t.scale > 0.0) || !std::isfinite(t.scale)) {
    throw DegenerateConfiguration("similarity estimate has non-positive scale");
  }
  return t;
}

double view_angle(double heading, double optical_axis) {
  double a = wrap_angle(heading - optical_axis);
  if (a > kPi / 2) a -= kPi;
  if (a <= -kPi / 2) a += kPi;
  return a;
}

double footprint_shift(const BoundingBox& b, double heading, const FootprintModel& model) {
  const double angle = view_angle(heading, model.optical_axis);
  if (std::abs(angle) <= model.threshold) return 0.0;
  return model.coefficient * b.width() * std::sin(angle);
}

ImagePoint footprint_point(const BoundingBox& b, std::optional<double> heading,
                           const FootprintModel& model) {
  ImagePoint p{0.5 * (b.p1.u + b.p2.u), b.p2.v};
  if (heading) p.u += footprint_shift(b, *heading, model);
  return p;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.p2.u, b.p2.u) - std::max(a.p1.u, b.p1.u);
  const double ih = std::min(a.p2.v, b.p2.v) - std::max(a.p1.v, b.p1.v);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

}  // namespace trajex
