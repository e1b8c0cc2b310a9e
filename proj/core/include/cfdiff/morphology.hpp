#pragma once

#include "cfdiff/image.hpp"

namespace cfdiff {

// Brain mask b, pathology mask p and the derived inpaint mask m, all binary
// and of equal shape. m is what an editing method actually regenerates.
struct MaskSet {
  Image brain;
  Image pathology;
  Image inpaint;
};

enum class StructuringElement { square, disk };

// Morphological dilation with a k x k element, k odd >= 1 (k = 1 is the
// identity). square = Chebyshev ball, separable O(n k); disk = Euclidean ball
// of radius (k-1)/2. Even or non-positive k raises ConfigError.
Image dilate(const Image& mask, int k,
             StructuringElement element = StructuringElement::square);

Image mask_intersect(const Image& a, const Image& b);
Image mask_union(const Image& a, const Image& b);
Image mask_complement(const Image& a);
int mask_area(const Image& a);

}  // namespace cfdiff
