#include "pointwise.hpp"

namespace maskpinn::kernels::detail {

namespace {

struct Workspace {
  Planes base;  // sigma and its derivatives
  Planes out;   // gated or scaled result
  ArrayXXd a, b, c, d, e, u;
  ArrayXXd scaled;  // s z; never touched by fill_activation
  ArrayXXd al, a2;  // alpha and alpha^2 broadcast; replicate() would defeat packet exp
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

// t = tanh(u) = sign(u) (1 - e) / (1 + e), e = exp(-2|u|); never overflows.
void tanh_into(const Eigen::Ref<const ArrayXXd>& u, ArrayXXd& t, ArrayXXd& scratch) {
  scratch = (-2.0 * u.abs()).exp();
  t = (1.0 - scratch) / (1.0 + scratch);
  t = (u < 0.0).select(-t, t);
}

// Logistic function, evaluated on the non-overflowing side.
void sigmoid_into(const Eigen::Ref<const ArrayXXd>& z, ArrayXXd& s, ArrayXXd& scratch) {
  scratch = (-z.abs()).exp();
  s = 1.0 / (1.0 + scratch);
  s = (z >= 0.0).select(s, scratch * s);
}

void tanh_derivs(const ArrayXXd& t, ArrayXXd& f1, ArrayXXd& f2, ArrayXXd& f3) {
  f1 = 1.0 - t.square();
  f2 = -2.0 * t * f1;
  f3 = f1 * (6.0 * t.square() - 2.0);
}

void fill_activation(nn::Activation act, const Eigen::Ref<const ArrayXXd>& z, Workspace& ws, Planes& p) {
  switch (act) {
    case nn::Activation::Tanh:
      tanh_into(z, p.f0, ws.a);
      tanh_derivs(p.f0, p.f1, p.f2, p.f3);
      return;
    case nn::Activation::Gelu: {
      const double c = nn::kGeluC;
      const double k = nn::kGeluA;
      ws.u = c * (z + k * z.square() * z);
      tanh_into(ws.u, ws.b, ws.a);  // b = t
      tanh_derivs(ws.b, ws.c, ws.d, ws.e);
      ws.u = c * (1.0 + 3.0 * k * z.square());  // u1; u2 = 6kc z, u3 = 6kc
      const double u3 = 6.0 * k * c;
      p.f0 = 0.5 * z * (1.0 + ws.b);
      p.f3 = ws.e * ws.u.cube() + 3.0 * ws.d * ws.u * (u3 * z) + ws.c * u3;  // g3
      ws.a = ws.d * ws.u.square() + ws.c * (u3 * z);                           // g2
      ws.e = ws.c * ws.u;                                                      // g1
      p.f1 = 0.5 * (1.0 + ws.b) + 0.5 * z * ws.e;
      p.f2 = ws.e + 0.5 * z * ws.a;
      p.f3 = 1.5 * ws.a + 0.5 * z * p.f3;
      return;
    }
    case nn::Activation::Silu:
      sigmoid_into(z, ws.b, ws.a);
      ws.c = ws.b * (1.0 - ws.b);        // s1
      ws.d = ws.c * (1.0 - 2.0 * ws.b);  // s2
      p.f0 = z * ws.b;
      p.f1 = ws.b + z * ws.c;
      p.f2 = 2.0 * ws.c + z * ws.d;
      p.f3 = 3.0 * ws.d + z * (ws.c * (1.0 - 6.0 * ws.b + 6.0 * ws.b.square()));
      return;
    case nn::Activation::Softplus:
      sigmoid_into(z, p.f1, ws.a);
      p.f2 = p.f1 * (1.0 - p.f1);
      p.f3 = p.f2 * (1.0 - 2.0 * p.f1);
      ws.a = z.min(nn::kSoftplusCut).exp();
      p.f0 = (z > nn::kSoftplusCut).select(z, (z < -nn::kSoftplusCut).select(ws.a, ws.a.log1p()));
      return;
  }
}

}  // namespace

const Planes& activation_planes(nn::Activation a, const Eigen::Ref<const ArrayXXd>& z) {
  Workspace& ws = workspace();
  fill_activation(a, z, ws, ws.out);
  return ws.out;
}

const Planes& masked_planes(nn::Activation a, const Eigen::Ref<const ArrayXXd>& z,
                            const Eigen::Ref<const Eigen::ArrayXd>& alpha) {
  Workspace& ws = workspace();
  const Planes& s = ws.base;
  fill_activation(a, z, ws, ws.base);
  Planes& o = ws.out;
  const Eigen::Index cols = z.cols();
  ws.al = alpha.replicate(1, cols);
  ws.a2 = ws.al.square();
  const ArrayXXd& al = ws.al;
  const ArrayXXd& a2 = ws.a2;
  // a = z^2, e = exp(-alpha^2 z^2); b, c, d hold the gate's z-derivatives.
  ws.a = z.square();
  ws.e = (-a2 * ws.a).exp();
  ws.b = 2.0 * a2 * z * ws.e;                                                 // g1
  ws.c = (2.0 * a2 - 4.0 * a2.square() * ws.a) * ws.e;                        // g2
  ws.d = (8.0 * a2.square() * a2 * ws.a * z - 12.0 * a2.square() * z) * ws.e;  // g3
  ws.u = 1.0 - ws.e;                                                          // g0
  o.f0 = ws.u * s.f0;
  o.f1 = ws.b * s.f0 + ws.u * s.f1;
  o.f2 = ws.c * s.f0 + 2.0 * ws.b * s.f1 + ws.u * s.f2;
  o.f3 = ws.d * s.f0 + 3.0 * ws.c * s.f1 + 3.0 * ws.b * s.f2 + ws.u * s.f3;
  // alpha-derivatives of g0, g1, g2
  ws.b = 2.0 * al * ws.a * ws.e;
  ws.c = (4.0 * al * z - 4.0 * al * a2 * ws.a * z) * ws.e;
  ws.d = (4.0 * al - 20.0 * al * a2 * ws.a + 8.0 * al * a2.square() * ws.a.square()) * ws.e;
  o.p0 = ws.b * s.f0;
  o.p1 = ws.c * s.f0 + ws.b * s.f1;
  o.p2 = ws.d * s.f0 + 2.0 * ws.c * s.f1 + ws.b * s.f2;
  return o;
}

const Planes& scaled_planes(nn::Activation a, const Eigen::Ref<const ArrayXXd>& z, double scale) {
  Workspace& ws = workspace();
  ws.scaled = scale * z;
  fill_activation(a, ws.scaled, ws, ws.base);
  const Planes& s = ws.base;
  Planes& o = ws.out;
  const double sc2 = scale * scale;
  o.f0 = s.f0;
  o.f1 = scale * s.f1;
  o.f2 = sc2 * s.f2;
  o.f3 = sc2 * scale * s.f3;
  o.p0 = z * s.f1;
  o.p1 = s.f1 + scale * z * s.f2;
  o.p2 = 2.0 * scale * s.f2 + sc2 * z * s.f3;
  return o;
}

}  // namespace maskpinn::kernels::detail
