#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "patchmine/core.hpp"

using namespace patchmine;

namespace {

// Oracle: count pixels one by one instead of using the closed-form overlap.
double iou_by_pixel_enumeration(const BoundingBox& a, const BoundingBox& b) {
  std::set<std::pair<int, int>> in_a, in_b;
  for (int y = a.y; y < a.y + a.h; ++y)
    for (int x = a.x; x < a.x + a.w; ++x) in_a.insert({x, y});
  for (int y = b.y; y < b.y + b.h; ++y)
    for (int x = b.x; x < b.x + b.w; ++x) in_b.insert({x, y});
  std::size_t inter = 0;
  for (const auto& p : in_a) inter += in_b.count(p);
  const std::size_t uni = in_a.size() + in_b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

TEST_CASE("iou of half-overlapping boxes") {
  const BoundingBox a{0, 0, 10, 10};
  const BoundingBox b{5, 0, 10, 10};
  CHECK(iou(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(iou(a, b) == doctest::Approx(iou_by_pixel_enumeration(a, b)).epsilon(1e-12));
}

TEST_CASE("iou limits") {
  const BoundingBox a{3, 4, 7, 9};
  CHECK(iou(a, a) == doctest::Approx(1.0));
  CHECK(iou(a, {100, 100, 5, 5}) == 0.0);
  // Boxes that share only an edge do not intersect (half-open extents).
  CHECK(iou({0, 0, 5, 5}, {5, 0, 5, 5}) == 0.0);
}

TEST_CASE("iou matches pixel enumeration on a grid of offsets") {
  const BoundingBox a{2, 3, 6, 4};
  for (int dx = -7; dx <= 7; dx += 3) {
    for (int dy = -5; dy <= 5; dy += 2) {
      const BoundingBox b{2 + dx, 3 + dy, 5, 6};
      CHECK(iou(a, b) == doctest::Approx(iou_by_pixel_enumeration(a, b)).epsilon(1e-12));
    }
  }
}

TEST_CASE("box area is w*h") {
  CHECK(BoundingBox{0, 0, 10, 10}.area() == 100);
  CHECK(BoundingBox{5, 9, 3, 7}.area() == 21);
  // No 32-bit overflow on large boxes.
  CHECK(BoundingBox{0, 0, 70000, 70000}.area() == 4900000000LL);
}

TEST_CASE("normalize_scores maps min-max to [0,1]") {
  const std::vector<double> raw{2.0, 4.0, 6.0};
  const auto norm = normalize_scores(raw);
  REQUIRE(norm.size() == 3);
  CHECK(norm[0] == doctest::Approx(0.0));
  CHECK(norm[1] == doctest::Approx(0.5));
  CHECK(norm[2] == doctest::Approx(1.0));
}

TEST_CASE("normalize_scores keeps order and range on arbitrary input") {
  const std::vector<double> raw{0.3, -1.0, 7.5, 7.5, 2.0};
  const auto norm = normalize_scores(raw);
  CHECK(norm[1] == doctest::Approx(0.0));
  CHECK(norm[2] == doctest::Approx(1.0));
  CHECK(norm[3] == doctest::Approx(1.0));
  for (std::size_t i = 0; i < raw.size(); ++i)
    for (std::size_t j = 0; j < raw.size(); ++j)
      if (raw[i] < raw[j]) CHECK(norm[i] < norm[j] + 1e-15);
  for (double v : norm) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("normalize_scores of a flat list is all ones") {
  const std::vector<double> raw{0.7, 0.7, 0.7};
  const auto norm = normalize_scores(raw);
  for (double v : norm) CHECK(v == 1.0);
  const auto single = normalize_scores(std::vector<double>{42.0});
  CHECK(single == std::vector<double>{1.0});
}

TEST_CASE("normalize_scores rejects an empty list") {
  CHECK_THROWS_AS(normalize_scores(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("source names round-trip") {
  CHECK(std::string(to_string(ProposalSource::RGB)) == "RGB");
  CHECK(std::string(to_string(ProposalSource::FLOW)) == "FLOW");
}
