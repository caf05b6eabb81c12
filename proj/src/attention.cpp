#include "ale/attention.hpp"

#include <cmath>

#include "ale/errors.hpp"

namespace ale {
namespace {

void validate_context(const AttentionContext& ctx) {
  const auto P = ctx.map.rows();
  const auto L = ctx.map.cols();
  if (P < 1 || L < 1) throw ShapeError("attention map is empty");

  if (ctx.object_values.size() != ctx.object_masks.size())
    throw ShapeError("value/mask count mismatch");
  const auto dv = ctx.base_value.cols();
  if (ctx.base_value.rows() != L)
    throw ShapeError("base value matrix must have one row per token");
  for (const auto& v : ctx.object_values)
    if (v.rows() != L || v.cols() != dv)
      throw ShapeError("object value matrix shape mismatch");

  if (ctx.background_mask.size() != P)
    throw ShapeError("background mask length mismatch");
  for (const auto& m : ctx.object_masks)
    if (m.size() != P) throw ShapeError("object mask length mismatch");

  for (Eigen::Index p = 0; p < P; ++p) {
    Scalar cover = ctx.background_mask[p];
    if (cover != Scalar(0) && cover != Scalar(1))
      throw PartitionError("background mask is not binary");
    for (const auto& m : ctx.object_masks) {
      if (m[p] != Scalar(0) && m[p] != Scalar(1))
        throw PartitionError("object mask is not binary");
      cover += m[p];
    }
    if (cover != Scalar(1))
      throw PartitionError("masks do not partition pixel " + std::to_string(p));
  }
}

Matrix masked_product(const Matrix& map, const ArrayX& mask, const Matrix& v) {
  Matrix masked = (map.array().colwise() * mask).matrix();
  return masked * v;
}

}  // namespace

Matrix rgb_cam_blend(const AttentionContext& ctx) {
  validate_context(ctx);

  // Term order is fixed (objects in index order, background last) so results
  // are reproducible bit for bit. Rows outside a term's mask are exact zeros
  // and leave the owning term's values intact.
  Matrix out = Matrix::Zero(ctx.map.rows(), ctx.base_value.cols());
  for (std::size_t i = 0; i < ctx.object_values.size(); ++i)
    out += masked_product(ctx.map, ctx.object_masks[i], ctx.object_values[i]);
  out += masked_product(ctx.map, ctx.background_mask, ctx.base_value);
  return out;
}

Matrix attention_map(const Matrix& q, const Matrix& k) {
  if (q.cols() != k.cols())
    throw ShapeError("query/key width mismatch in attention map");
  const Scalar scale =
      Scalar(1) / std::sqrt(static_cast<Scalar>(q.cols()));
  Matrix logits = q * k.transpose() * scale;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Scalar m = logits.row(r).maxCoeff();
    ArrayX e       = (logits.row(r).array() - m).exp();
    logits.row(r)  = (e / e.sum()).matrix();
  }
  return logits;
}

std::vector<int> InjectionSchedule::active_steps() const {
  std::vector<int> steps(active_count);
  for (int i = 0; i < active_count; ++i) steps[i] = i;
  return steps;
}

InjectionSchedule resolve_schedule(double fraction, int total_steps) {
  if (total_steps < 1) throw RangeError("schedule needs at least one step");
  if (fraction < 0.0 || fraction > 1.0)
    throw RangeError("schedule fraction must lie in [0, 1]");

  InjectionSchedule s;
  s.fraction    = fraction;
  s.total_steps = total_steps;
  // ceil with a guard against product noise: 0.2 * 15 evaluates a hair above
  // 3.0 in doubles and must still count as 3 active steps, while an exact
  // 7.5 must round up to 8.
  s.active_count =
      static_cast<int>(std::ceil(fraction * total_steps - 1e-9));
  if (s.active_count < 0) s.active_count = 0;
  if (s.active_count > total_steps) s.active_count = total_steps;
  return s;
}

const AttentionQK& inject_self_attention(const AttentionQK& source,
                                         const AttentionQK& target, int step,
                                         const InjectionSchedule& schedule) {
  if (!schedule.active(step)) return target;
  if (source.q.rows() != target.q.rows() || source.q.cols() != target.q.cols() ||
      source.k.rows() != target.k.rows() || source.k.cols() != target.k.cols())
    throw ShapeError("injected Q/K shapes do not match the target layer");
  return source;
}

}  // namespace ale
