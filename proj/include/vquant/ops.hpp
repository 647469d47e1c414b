#pragma once

#include "vquant/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace vquant {

/// Added to norm products in cosine similarity so zero vectors score 0.
inline constexpr double kNormEpsilon = 1e-8;

enum class BinaryOp { add, sub, mul };

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

template <typename Scalar>
void accumulate(Node<Scalar>& parent, const Vector<Scalar>& g) {
  if (parent.requires_grad) parent.grad_ref().data() += g;
}

template <typename Scalar, typename Derived>
void accumulate_matrix(Node<Scalar>& parent, const Eigen::MatrixBase<Derived>& g) {
  if (parent.requires_grad) parent.grad_ref().matrix() += g;
}

}  // namespace detail

/// [m x k] . [k x n] -> [m x n]; a rank-1 right operand [k] yields [m].
template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  const auto& A = a.value();
  const auto& B = b.value();
  detail::require(A.rank() == 2 && (B.rank() == 1 || B.rank() == 2),
                  "matmul expects rank-2 left and rank-1/2 right operands, got " +
                      shape_string(A.shape()) + " and " + shape_string(B.shape()));
  detail::require(A.dim(1) == B.dim(0), "matmul inner dimensions disagree: " +
                                            shape_string(A.shape()) + " . " + shape_string(B.shape()));
  Shape out_shape = B.rank() == 1 ? Shape{A.dim(0)} : Shape{A.dim(0), B.dim(1)};
  Tensor<Scalar> out(out_shape);
  out.matrix().noalias() = A.matrix() * B.matrix();
  return detail::make_result<Scalar>(std::move(out), {a.node(), b.node()}, [](Node<Scalar>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const auto G = self.grad.matrix();
    if (pa.requires_grad) pa.grad_ref().matrix().noalias() += G * pb.value.matrix().transpose();
    if (pb.requires_grad) pb.grad_ref().matrix().noalias() += pa.value.matrix().transpose() * G;
  });
}

template <typename Scalar>
Var<Scalar> transpose(const Var<Scalar>& a) {
  const auto& A = a.value();
  detail::require(A.rank() == 2, "transpose expects a matrix, got " + shape_string(A.shape()));
  Tensor<Scalar> out({A.dim(1), A.dim(0)});
  out.matrix() = A.matrix().transpose();
  return detail::make_result<Scalar>(std::move(out), {a.node()}, [](Node<Scalar>& self) {
    detail::accumulate_matrix(*self.parents[0], self.grad.matrix().transpose());
  });
}

/**
 * Elementwise add/sub/mul. Operands must share a shape, except that either
 * side may be a single-element tensor, which broadcasts.
 */
template <typename Scalar>
Var<Scalar> elementwise(const Var<Scalar>& a, const Var<Scalar>& b, BinaryOp op) {
  const auto& A = a.value();
  const auto& B = b.value();
  const bool a_scalar = A.size() == 1 && !A.same_shape(B);
  const bool b_scalar = B.size() == 1 && !A.same_shape(B);
  detail::require(A.same_shape(B) || a_scalar || b_scalar,
                  "incompatible shapes " + shape_string(A.shape()) + " and " + shape_string(B.shape()));
  const Shape& out_shape = a_scalar ? B.shape() : A.shape();
  Vector<Scalar> va = a_scalar ? Vector<Scalar>::Constant(B.size(), A[0]) : A.data();
  Vector<Scalar> vb = b_scalar ? Vector<Scalar>::Constant(A.size(), B[0]) : B.data();
  Vector<Scalar> r;
  switch (op) {
    case BinaryOp::add: r = va + vb; break;
    case BinaryOp::sub: r = va - vb; break;
    case BinaryOp::mul: r = va.cwiseProduct(vb); break;
  }
  return detail::make_result<Scalar>(
      Tensor<Scalar>(out_shape, std::move(r)), {a.node(), b.node()},
      [op, a_scalar, b_scalar](Node<Scalar>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const auto& G = self.grad.data();
        auto route = [](Node<Scalar>& p, bool collapsed, const Vector<Scalar>& g) {
          if (!p.requires_grad) return;
          if (collapsed) {
            p.grad_ref()[0] += g.sum();
          } else {
            p.grad_ref().data() += g;
          }
        };
        switch (op) {
          case BinaryOp::add:
            route(pa, a_scalar, G);
            route(pb, b_scalar, G);
            break;
          case BinaryOp::sub:
            route(pa, a_scalar, G);
            route(pb, b_scalar, Vector<Scalar>(-G));
            break;
          case BinaryOp::mul: {
            const Vector<Scalar> va =
                a_scalar ? Vector<Scalar>::Constant(G.size(), pa.value[0]) : pa.value.data();
            const Vector<Scalar> vb =
                b_scalar ? Vector<Scalar>::Constant(G.size(), pb.value[0]) : pb.value.data();
            route(pa, a_scalar, Vector<Scalar>(G.cwiseProduct(vb)));
            route(pb, b_scalar, Vector<Scalar>(G.cwiseProduct(va)));
            break;
          }
        }
      });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  return elementwise(a, b, BinaryOp::add);
}
template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  return elementwise(a, b, BinaryOp::sub);
}
template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  return elementwise(a, b, BinaryOp::mul);
}

/// M + 1 v^T: adds the vector v [c] to every row of M [r x c].
template <typename Scalar>
Var<Scalar> add_rowwise(const Var<Scalar>& m, const Var<Scalar>& v) {
  const auto& M = m.value();
  const auto& V = v.value();
  detail::require(M.rank() == 2 && V.rank() == 1 && M.dim(1) == V.dim(0),
                  "add_rowwise expects [r x c] and [c], got " + shape_string(M.shape()) + " and " +
                      shape_string(V.shape()));
  Tensor<Scalar> out(M.shape());
  out.matrix() = M.matrix().rowwise() + V.data().transpose();
  return detail::make_result<Scalar>(std::move(out), {m.node(), v.node()}, [](Node<Scalar>& self) {
    detail::accumulate(*self.parents[0], self.grad.data());
    auto& pv = *self.parents[1];
    if (pv.requires_grad) pv.grad_ref().data() += self.grad.matrix().colwise().sum().transpose();
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar s) {
  Tensor<Scalar> out(a.shape(), a.value().data() * s);
  return detail::make_result<Scalar>(std::move(out), {a.node()}, [s](Node<Scalar>& self) {
    detail::accumulate(*self.parents[0], Vector<Scalar>(self.grad.data() * s));
  });
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& a) {
  Tensor<Scalar> out(a.shape(), a.value().data().array().tanh().matrix());
  return detail::make_result<Scalar>(std::move(out), {a.node()}, [](Node<Scalar>& self) {
    const auto& y = self.value.data().array();
    detail::accumulate(*self.parents[0],
                       Vector<Scalar>(self.grad.data().array() * (Scalar(1) - y.square())));
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& a) {
  Vector<Scalar> y = (Scalar(1) + (-a.value().data().array()).exp()).inverse().matrix();
  Tensor<Scalar> out(a.shape(), std::move(y));
  return detail::make_result<Scalar>(std::move(out), {a.node()}, [](Node<Scalar>& self) {
    const auto& y = self.value.data().array();
    detail::accumulate(*self.parents[0],
                       Vector<Scalar>(self.grad.data().array() * y * (Scalar(1) - y)));
  });
}

/**
 * Concatenates along an axis. Rank-1 inputs join on axis 0; rank-2 inputs
 * join on axis 0 (stack rows) or axis 1 (append columns).
 */
template <typename Scalar>
Var<Scalar> concat(std::span<const Var<Scalar>> parts, int axis = 0) {
  detail::require(!parts.empty(), "concat of an empty list");
  const std::size_t rank = parts[0].value().rank();
  detail::require(rank <= 2, "concat supports rank 1 and 2");
  detail::require(axis == 0 || (rank == 2 && axis == 1), "concat axis out of range");
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    const auto& t = p.value();
    detail::require(t.rank() == rank, "concat rank mismatch");
    if (rank == 2) {
      const std::size_t other = axis == 0 ? 1 : 0;
      detail::require(t.dim(other) == parts[0].value().dim(other),
                      "concat shape mismatch " + shape_string(t.shape()));
    }
    total += t.dim(static_cast<std::size_t>(axis));
  }
  Shape out_shape = parts[0].value().shape();
  out_shape[static_cast<std::size_t>(axis)] = total;
  Tensor<Scalar> out(out_shape);
  std::vector<std::shared_ptr<Node<Scalar>>> parents;
  std::vector<Eigen::Index> offsets;
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    const auto& t = p.value();
    if (rank == 1 || axis == 0) {
      out.matrix().middleRows(offset, t.dim(0)) = t.matrix();
    } else {
      out.matrix().middleCols(offset, t.dim(1)) = t.matrix();
    }
    offsets.push_back(offset);
    offset += t.dim(static_cast<std::size_t>(axis));
    parents.push_back(p.node());
  }
  const bool by_rows = rank == 1 || axis == 0;
  return detail::make_result<Scalar>(
      std::move(out), std::move(parents), [offsets, by_rows](Node<Scalar>& self) {
        const auto G = self.grad.matrix();
        for (std::size_t i = 0; i < self.parents.size(); ++i) {
          auto& p = *self.parents[i];
          if (!p.requires_grad) continue;
          if (by_rows) {
            p.grad_ref().matrix() += G.middleRows(offsets[i], p.value.dim(0));
          } else {
            p.grad_ref().matrix() += G.middleCols(offsets[i], p.value.dim(1));
          }
        }
      });
}

template <typename Scalar>
Var<Scalar> concat(std::initializer_list<Var<Scalar>> parts, int axis = 0) {
  std::vector<Var<Scalar>> v(parts);
  return concat(std::span<const Var<Scalar>>(v), axis);
}

/**
 * Sum reduction. axis = -1 sums everything to a single element; for a matrix,
 * axis 0 gives column sums [c] and axis 1 gives row sums [r].
 */
template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a, int axis = -1) {
  const auto& A = a.value();
  Tensor<Scalar> out;
  if (axis == -1 || A.rank() == 1) {
    detail::require(axis == -1 || axis == 0, "sum axis out of range");
    out = Tensor<Scalar>::scalar(A.data().sum());
  } else {
    detail::require(A.rank() == 2 && (axis == 0 || axis == 1), "sum axis out of range");
    out = axis == 0 ? Tensor<Scalar>::from_vector(A.matrix().colwise().sum().transpose())
                    : Tensor<Scalar>::from_vector(A.matrix().rowwise().sum());
  }
  const bool all = axis == -1 || A.rank() == 1;
  return detail::make_result<Scalar>(std::move(out), {a.node()}, [all, axis](Node<Scalar>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    if (all) {
      p.grad_ref().data().array() += self.grad[0];
    } else if (axis == 0) {
      p.grad_ref().matrix().rowwise() += self.grad.data().transpose();
    } else {
      p.grad_ref().matrix().colwise() += self.grad.data();
    }
  });
}

/// Softmax over a vector, shifted by its maximum for stability.
template <typename Scalar>
Var<Scalar> softmax(const Var<Scalar>& a) {
  const auto& x = a.value();
  detail::require(x.rank() == 1, "softmax expects a vector, got " + shape_string(x.shape()));
  Vector<Scalar> e = (x.data().array() - x.data().maxCoeff()).exp().matrix();
  e /= e.sum();
  return detail::make_result<Scalar>(Tensor<Scalar>(x.shape(), std::move(e)), {a.node()},
                                     [](Node<Scalar>& self) {
                                       const auto& y = self.value.data();
                                       const auto& g = self.grad.data();
                                       const Scalar dot = g.dot(y);
                                       detail::accumulate(
                                           *self.parents[0],
                                           Vector<Scalar>(y.cwiseProduct(g.array().matrix()) -
                                                          y * dot));
                                     });
}

/// (a . b) / (|a| |b| + eps). Zero-norm inputs get a zero subgradient through the norm.
template <typename Scalar>
Var<Scalar> cosine(const Var<Scalar>& a, const Var<Scalar>& b) {
  const auto& A = a.value();
  const auto& B = b.value();
  detail::require(A.rank() == 1 && A.same_shape(B),
                  "cosine expects equal-length vectors, got " + shape_string(A.shape()) + " and " +
                      shape_string(B.shape()));
  const Scalar na = A.data().norm();
  const Scalar nb = B.data().norm();
  const Scalar dot = A.data().dot(B.data());
  const Scalar denom = na * nb + Scalar(kNormEpsilon);
  return detail::make_result<Scalar>(
      Tensor<Scalar>::scalar(dot / denom), {a.node(), b.node()},
      [na, nb, dot, denom](Node<Scalar>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const Scalar g = self.grad[0];
        const Scalar d2 = denom * denom;
        if (pa.requires_grad) {
          Vector<Scalar> da = pb.value.data() / denom;
          if (na > 0) da -= pa.value.data() * (dot * nb / (na * d2));
          pa.grad_ref().data() += g * da;
        }
        if (pb.requires_grad) {
          Vector<Scalar> db = pa.value.data() / denom;
          if (nb > 0) db -= pb.value.data() * (dot * na / (nb * d2));
          pb.grad_ref().data() += g * db;
        }
      });
}

/// Cosine similarity of every row of M [r x c] with v [c]; returns [r].
template <typename Scalar>
Var<Scalar> cosine_rows(const Var<Scalar>& m, const Var<Scalar>& v) {
  const auto& M = m.value();
  const auto& V = v.value();
  detail::require(M.rank() == 2 && V.rank() == 1 && M.dim(1) == V.dim(0),
                  "cosine_rows expects [r x c] and [c], got " + shape_string(M.shape()) + " and " +
                      shape_string(V.shape()));
  const Vector<Scalar> row_norms = M.matrix().rowwise().norm();
  const Scalar nv = V.data().norm();
  const Vector<Scalar> dots = M.matrix() * V.data();
  const Vector<Scalar> denoms = (row_norms.array() * nv + Scalar(kNormEpsilon)).matrix();
  Vector<Scalar> out = dots.cwiseQuotient(denoms);
  return detail::make_result<Scalar>(
      Tensor<Scalar>({M.dim(0)}, std::move(out)), {m.node(), v.node()},
      [row_norms, nv, dots, denoms](Node<Scalar>& self) {
        auto& pm = *self.parents[0];
        auto& pv = *self.parents[1];
        const auto& g = self.grad.data();
        const auto Mv = pm.value.matrix();
        const auto& vv = pv.value.data();
        Vector<Scalar> gv = Vector<Scalar>::Zero(vv.size());
        auto Gm = pm.requires_grad ? &pm.grad_ref() : nullptr;
        for (Eigen::Index i = 0; i < Mv.rows(); ++i) {
          const Scalar d = denoms[i];
          const Scalar d2 = d * d;
          if (Gm) {
            Vector<Scalar> dm = vv / d;
            if (row_norms[i] > 0) dm -= Mv.row(i).transpose() * (dots[i] * nv / (row_norms[i] * d2));
            Gm->matrix().row(i) += g[i] * dm.transpose();
          }
          gv += g[i] * (Mv.row(i).transpose() / d);
          if (nv > 0) gv -= g[i] * vv * (dots[i] * row_norms[i] / (nv * d2));
        }
        if (pv.requires_grad) pv.grad_ref().data() += gv;
      });
}

/// diag(w) M: scales row i of M [r x c] by w[i].
template <typename Scalar>
Var<Scalar> scale_rows(const Var<Scalar>& m, const Var<Scalar>& w) {
  const auto& M = m.value();
  const auto& W = w.value();
  detail::require(M.rank() == 2 && W.rank() == 1 && M.dim(0) == W.dim(0),
                  "scale_rows expects [r x c] and [r], got " + shape_string(M.shape()) + " and " +
                      shape_string(W.shape()));
  Tensor<Scalar> out(M.shape());
  out.matrix() = W.data().asDiagonal() * M.matrix();
  return detail::make_result<Scalar>(std::move(out), {m.node(), w.node()}, [](Node<Scalar>& self) {
    auto& pm = *self.parents[0];
    auto& pw = *self.parents[1];
    const auto G = self.grad.matrix();
    if (pm.requires_grad) pm.grad_ref().matrix() += pw.value.data().asDiagonal() * G;
    if (pw.requires_grad) {
      pw.grad_ref().data() += G.cwiseProduct(pm.value.matrix()).rowwise().sum();
    }
  });
}

/// Elements [begin, begin + length) of a vector.
template <typename Scalar>
Var<Scalar> slice(const Var<Scalar>& a, Eigen::Index begin, Eigen::Index length) {
  const auto& A = a.value();
  detail::require(A.rank() == 1 && begin >= 0 && length > 0 && begin + length <= A.dim(0),
                  "slice out of range for " + shape_string(A.shape()));
  Tensor<Scalar> out({length}, A.data().segment(begin, length));
  return detail::make_result<Scalar>(std::move(out), {a.node()}, [begin, length](Node<Scalar>& self) {
    auto& p = *self.parents[0];
    if (p.requires_grad) p.grad_ref().data().segment(begin, length) += self.grad.data();
  });
}

/// Row i of a matrix as a vector.
template <typename Scalar>
Var<Scalar> row(const Var<Scalar>& m, Eigen::Index i) {
  const auto& M = m.value();
  detail::require(M.rank() == 2 && i >= 0 && i < M.dim(0),
                  "row index out of range for " + shape_string(M.shape()));
  Tensor<Scalar> out = Tensor<Scalar>::from_vector(M.matrix().row(i).transpose());
  return detail::make_result<Scalar>(std::move(out), {m.node()}, [i](Node<Scalar>& self) {
    auto& p = *self.parents[0];
    if (p.requires_grad) p.grad_ref().matrix().row(i) += self.grad.data().transpose();
  });
}

/// -log softmax(logits)[label], via log-sum-exp.
template <typename Scalar>
Var<Scalar> cross_entropy(const Var<Scalar>& logits, int label) {
  const auto& x = logits.value();
  detail::require(x.rank() == 1 && label >= 0 && label < x.dim(0),
                  "cross_entropy label out of range for " + shape_string(x.shape()));
  const Scalar mx = x.data().maxCoeff();
  Vector<Scalar> p = (x.data().array() - mx).exp().matrix();
  const Scalar z = p.sum();
  p /= z;
  const Scalar loss = mx + std::log(z) - x[label];
  return detail::make_result<Scalar>(Tensor<Scalar>::scalar(loss), {logits.node()},
                                     [p, label](Node<Scalar>& self) {
                                       Vector<Scalar> g = p;
                                       g[label] -= Scalar(1);
                                       detail::accumulate(*self.parents[0],
                                                          Vector<Scalar>(g * self.grad[0]));
                                     });
}

/**
 * Unpadded 2-D convolution of a single-channel image [H x W] with a filter
 * bank [F x R x R] plus bias [F], at the given stride. Returns [F x Ho x Wo]
 * with Ho = (H - R) / stride + 1. Computed as an im2col product.
 */
template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& image, const Var<Scalar>& filters, const Var<Scalar>& bias,
                   int stride) {
  const auto& X = image.value();
  const auto& K = filters.value();
  const auto& B = bias.value();
  detail::require(X.rank() == 2, "conv2d expects a rank-2 image, got " + shape_string(X.shape()));
  detail::require(K.rank() == 3 && K.dim(1) == K.dim(2),
                  "conv2d expects square filters [F x R x R], got " + shape_string(K.shape()));
  detail::require(B.rank() == 1 && B.dim(0) == K.dim(0), "conv2d bias must have one entry per filter");
  detail::require(stride >= 1, "conv2d stride must be positive");
  const Eigen::Index H = X.dim(0), W = X.dim(1), F = K.dim(0), R = K.dim(1);
  detail::require(H >= R && W >= R, "conv2d receptive field larger than image");
  const Eigen::Index Ho = (H - R) / stride + 1;
  const Eigen::Index Wo = (W - R) / stride + 1;

  RowMatrix<Scalar> patches(Ho * Wo, R * R);
  const auto img = X.matrix();
  for (Eigen::Index oy = 0; oy < Ho; ++oy) {
    for (Eigen::Index ox = 0; ox < Wo; ++ox) {
      auto row_out = patches.row(oy * Wo + ox);
      for (Eigen::Index ky = 0; ky < R; ++ky) {
        row_out.segment(ky * R, R) = img.row(oy * stride + ky).segment(ox * stride, R);
      }
    }
  }
  Tensor<Scalar> out({F, Ho, Wo});
  out.matrix().noalias() = K.matrix() * patches.transpose();
  out.matrix().colwise() += B.data();

  return detail::make_result<Scalar>(
      std::move(out), {image.node(), filters.node(), bias.node()},
      [patches = std::move(patches), Ho, Wo, R, stride](Node<Scalar>& self) {
        auto& px = *self.parents[0];
        auto& pk = *self.parents[1];
        auto& pb = *self.parents[2];
        const auto G = self.grad.matrix();  // [F x Ho*Wo]
        if (pk.requires_grad) pk.grad_ref().matrix().noalias() += G * patches;
        if (pb.requires_grad) pb.grad_ref().data() += G.rowwise().sum();
        if (px.requires_grad) {
          const RowMatrix<Scalar> dpatches = G.transpose() * pk.value.matrix();
          auto dimg = px.grad_ref().matrix();
          for (Eigen::Index oy = 0; oy < Ho; ++oy) {
            for (Eigen::Index ox = 0; ox < Wo; ++ox) {
              for (Eigen::Index ky = 0; ky < R; ++ky) {
                dimg.row(oy * stride + ky).segment(ox * stride, R) +=
                    dpatches.row(oy * Wo + ox).segment(ky * R, R);
              }
            }
          }
        }
      });
}

/// Mean over every axis but the first: [F x ...] -> [F].
template <typename Scalar>
Var<Scalar> spatial_mean(const Var<Scalar>& a) {
  const auto& A = a.value();
  detail::require(A.rank() >= 2, "spatial_mean expects rank >= 2, got " + shape_string(A.shape()));
  const Scalar n = static_cast<Scalar>(A.cols());
  Tensor<Scalar> out = Tensor<Scalar>::from_vector(A.matrix().rowwise().mean());
  return detail::make_result<Scalar>(std::move(out), {a.node()}, [n](Node<Scalar>& self) {
    auto& p = *self.parents[0];
    if (p.requires_grad) p.grad_ref().matrix().colwise() += self.grad.data() / n;
  });
}

}  // namespace vquant
