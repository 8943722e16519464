#include "vmreg/graph.hpp"

#include <cmath>

#include "vmreg/circmath.hpp"

namespace vmreg {

namespace {

double stable_softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Graph::Var Graph::push(Tensor val, std::function<void(Graph&, Node&)> back) {
  Node n;
  n.val = std::move(val);
  n.grad = Tensor(n.val.rows, n.val.cols);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size()) - 1;
}

Graph::Var Graph::input(Tensor t) { return push(std::move(t), nullptr); }

Graph::Var Graph::param(const Tensor* value, Tensor* grad) {
  Var v = push(*value, nullptr);
  nodes_.back().bound_grad = grad;
  return v;
}

double Graph::scalar(Var v) const {
  const Tensor& t = val_of(v);
  if (t.rows != 1 || t.cols != 1) throw ShapeMismatch("scalar: node is not (1,1)");
  return t.v[0];
}

Graph::Var Graph::affine(Var x, Var w, Var b) {
  const Tensor& xv = val_of(x);
  const Tensor& wv = val_of(w);
  const Tensor& bv = val_of(b);
  if (xv.cols != wv.cols || bv.rows != 1 || bv.cols != wv.rows) {
    throw ShapeMismatch("affine: incompatible shapes");
  }
  int n = xv.rows, in = xv.cols, out = wv.rows;
  Tensor y(n, out);
  for (int i = 0; i < n; ++i) {
    const double* xi = &xv.v[static_cast<std::size_t>(i) * in];
    double* yi = &y.v[static_cast<std::size_t>(i) * out];
    for (int o = 0; o < out; ++o) {
      const double* wo = &wv.v[static_cast<std::size_t>(o) * in];
      double acc = bv.v[o];
      for (int j = 0; j < in; ++j) acc += xi[j] * wo[j];
      yi[o] = acc;
    }
  }
  return push(std::move(y), [x, w, b, n, in, out](Graph& g, Node& self) {
    const Tensor& xv = g.val_of(x);
    const Tensor& wv = g.val_of(w);
    Tensor& gx = g.grad_of(x);
    Tensor& gw = g.grad_of(w);
    Tensor& gb = g.grad_of(b);
    for (int i = 0; i < n; ++i) {
      const double* gyi = &self.grad.v[static_cast<std::size_t>(i) * out];
      const double* xi = &xv.v[static_cast<std::size_t>(i) * in];
      double* gxi = &gx.v[static_cast<std::size_t>(i) * in];
      for (int o = 0; o < out; ++o) {
        double gy = gyi[o];
        if (gy == 0.0) continue;
        const double* wo = &wv.v[static_cast<std::size_t>(o) * in];
        double* gwo = &gw.v[static_cast<std::size_t>(o) * in];
        for (int j = 0; j < in; ++j) {
          gxi[j] += gy * wo[j];
          gwo[j] += gy * xi[j];
        }
        gb.v[o] += gy;
      }
    }
  });
}

Graph::Var Graph::relu(Var x) {
  Tensor y = val_of(x);
  for (double& e : y.v) e = e > 0.0 ? e : 0.0;
  return push(std::move(y), [x](Graph& g, Node& self) {
    const Tensor& xv = g.val_of(x);
    Tensor& gx = g.grad_of(x);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      if (xv.v[i] > 0.0) gx.v[i] += self.grad.v[i];
    }
  });
}

Graph::Var Graph::tanh_act(Var x) {
  Tensor y = val_of(x);
  for (double& e : y.v) e = std::tanh(e);
  return push(std::move(y), [x](Graph& g, Node& self) {
    Tensor& gx = g.grad_of(x);
    for (std::size_t i = 0; i < self.val.size(); ++i) {
      double t = self.val.v[i];
      gx.v[i] += self.grad.v[i] * (1.0 - t * t);
    }
  });
}

Graph::Var Graph::add(Var a, Var b) {
  const Tensor& av = val_of(a);
  const Tensor& bv = val_of(b);
  if (!av.same_shape(bv)) throw ShapeMismatch("add: shape mismatch");
  Tensor y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y.v[i] += bv.v[i];
  return push(std::move(y), [a, b](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    Tensor& gb = g.grad_of(b);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      ga.v[i] += self.grad.v[i];
      gb.v[i] += self.grad.v[i];
    }
  });
}

Graph::Var Graph::sub(Var a, Var b) {
  const Tensor& av = val_of(a);
  const Tensor& bv = val_of(b);
  if (!av.same_shape(bv)) throw ShapeMismatch("sub: shape mismatch");
  Tensor y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y.v[i] -= bv.v[i];
  return push(std::move(y), [a, b](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    Tensor& gb = g.grad_of(b);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      ga.v[i] += self.grad.v[i];
      gb.v[i] -= self.grad.v[i];
    }
  });
}

Graph::Var Graph::mul(Var a, Var b) {
  const Tensor& av = val_of(a);
  const Tensor& bv = val_of(b);
  if (!av.same_shape(bv)) throw ShapeMismatch("mul: shape mismatch");
  Tensor y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y.v[i] *= bv.v[i];
  return push(std::move(y), [a, b](Graph& g, Node& self) {
    const Tensor& av = g.val_of(a);
    const Tensor& bv = g.val_of(b);
    Tensor& ga = g.grad_of(a);
    Tensor& gb = g.grad_of(b);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      ga.v[i] += self.grad.v[i] * bv.v[i];
      gb.v[i] += self.grad.v[i] * av.v[i];
    }
  });
}

Graph::Var Graph::mul_colvec(Var a, Var col) {
  const Tensor& av = val_of(a);
  const Tensor& cv = val_of(col);
  if (cv.cols != 1 || cv.rows != av.rows) throw ShapeMismatch("mul_colvec: shape mismatch");
  Tensor y = av;
  for (int i = 0; i < av.rows; ++i)
    for (int j = 0; j < av.cols; ++j) y.at(i, j) *= cv.v[static_cast<std::size_t>(i)];
  return push(std::move(y), [a, col](Graph& g, Node& self) {
    const Tensor& av = g.val_of(a);
    const Tensor& cv = g.val_of(col);
    Tensor& ga = g.grad_of(a);
    Tensor& gc = g.grad_of(col);
    for (int i = 0; i < av.rows; ++i) {
      double acc = 0.0;
      for (int j = 0; j < av.cols; ++j) {
        ga.at(i, j) += self.grad.at(i, j) * cv.v[static_cast<std::size_t>(i)];
        acc += self.grad.at(i, j) * av.at(i, j);
      }
      gc.v[static_cast<std::size_t>(i)] += acc;
    }
  });
}

Graph::Var Graph::scale(Var a, double c) {
  Tensor y = val_of(a);
  for (double& e : y.v) e *= c;
  return push(std::move(y), [a, c](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga.v[i] += self.grad.v[i] * c;
  });
}

Graph::Var Graph::add_scalar(Var a, double c) {
  Tensor y = val_of(a);
  for (double& e : y.v) e += c;
  return push(std::move(y), [a](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga.v[i] += self.grad.v[i];
  });
}

Graph::Var Graph::exp_elem(Var a) {
  Tensor y = val_of(a);
  for (double& e : y.v) e = std::exp(e);
  return push(std::move(y), [a](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga.v[i] += self.grad.v[i] * self.val.v[i];
  });
}

Graph::Var Graph::square(Var a) {
  Tensor y = val_of(a);
  for (double& e : y.v) e *= e;
  return push(std::move(y), [a](Graph& g, Node& self) {
    const Tensor& av = g.val_of(a);
    Tensor& ga = g.grad_of(a);
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga.v[i] += self.grad.v[i] * 2.0 * av.v[i];
  });
}

Graph::Var Graph::concat_cols(Var a, Var b) {
  const Tensor& av = val_of(a);
  const Tensor& bv = val_of(b);
  if (av.rows != bv.rows) throw ShapeMismatch("concat_cols: row mismatch");
  Tensor y(av.rows, av.cols + bv.cols);
  for (int i = 0; i < av.rows; ++i) {
    for (int j = 0; j < av.cols; ++j) y.at(i, j) = av.at(i, j);
    for (int j = 0; j < bv.cols; ++j) y.at(i, av.cols + j) = bv.at(i, j);
  }
  return push(std::move(y), [a, b](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    Tensor& gb = g.grad_of(b);
    int ac = ga.cols;
    for (int i = 0; i < ga.rows; ++i) {
      for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += self.grad.at(i, j);
      for (int j = 0; j < gb.cols; ++j) gb.at(i, j) += self.grad.at(i, ac + j);
    }
  });
}

Graph::Var Graph::slice_cols(Var a, int start, int len) {
  const Tensor& av = val_of(a);
  if (start < 0 || len < 1 || start + len > av.cols) throw ShapeMismatch("slice_cols: out of range");
  Tensor y(av.rows, len);
  for (int i = 0; i < av.rows; ++i)
    for (int j = 0; j < len; ++j) y.at(i, j) = av.at(i, start + j);
  return push(std::move(y), [a, start, len](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    for (int i = 0; i < ga.rows; ++i)
      for (int j = 0; j < len; ++j) ga.at(i, start + j) += self.grad.at(i, j);
  });
}

Graph::Var Graph::normalize_rows(Var a) {
  const Tensor& av = val_of(a);
  Tensor y(av.rows, av.cols);
  Tensor norms(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) {
    double r;
    if (av.cols == 2) {
      r = std::hypot(av.at(i, 0), av.at(i, 1));
    } else {
      double ss = 0.0;
      for (int j = 0; j < av.cols; ++j) ss += av.at(i, j) * av.at(i, j);
      r = std::sqrt(ss);
    }
    if (!(r > kNormEps)) throw DegenerateVector("normalize_rows: collapsed output vector");
    norms.v[static_cast<std::size_t>(i)] = r;
    for (int j = 0; j < av.cols; ++j) y.at(i, j) = av.at(i, j) / r;
  }
  return push(std::move(y), [a, norms](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    for (int i = 0; i < ga.rows; ++i) {
      double r = norms.v[static_cast<std::size_t>(i)];
      double dot = 0.0;
      for (int j = 0; j < ga.cols; ++j) dot += self.grad.at(i, j) * self.val.at(i, j);
      for (int j = 0; j < ga.cols; ++j) {
        ga.at(i, j) += (self.grad.at(i, j) - self.val.at(i, j) * dot) / r;
      }
    }
  });
}

Graph::Var Graph::softmax_rows(Var a) {
  const Tensor& av = val_of(a);
  Tensor y(av.rows, av.cols);
  for (int i = 0; i < av.rows; ++i) {
    double m = av.at(i, 0);
    for (int j = 1; j < av.cols; ++j) m = std::max(m, av.at(i, j));
    double z = 0.0;
    for (int j = 0; j < av.cols; ++j) {
      double e = std::exp(av.at(i, j) - m);
      y.at(i, j) = e;
      z += e;
    }
    for (int j = 0; j < av.cols; ++j) y.at(i, j) /= z;
  }
  return push(std::move(y), [a](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    for (int i = 0; i < ga.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < ga.cols; ++j) dot += self.grad.at(i, j) * self.val.at(i, j);
      for (int j = 0; j < ga.cols; ++j) {
        ga.at(i, j) += self.val.at(i, j) * (self.grad.at(i, j) - dot);
      }
    }
  });
}

Graph::Var Graph::log_softmax_rows(Var a) {
  const Tensor& av = val_of(a);
  Tensor y(av.rows, av.cols);
  for (int i = 0; i < av.rows; ++i) {
    double m = av.at(i, 0);
    for (int j = 1; j < av.cols; ++j) m = std::max(m, av.at(i, j));
    double z = 0.0;
    for (int j = 0; j < av.cols; ++j) z += std::exp(av.at(i, j) - m);
    double lse = m + std::log(z);
    for (int j = 0; j < av.cols; ++j) y.at(i, j) = av.at(i, j) - lse;
  }
  return push(std::move(y), [a](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    for (int i = 0; i < ga.rows; ++i) {
      double gsum = 0.0;
      for (int j = 0; j < ga.cols; ++j) gsum += self.grad.at(i, j);
      for (int j = 0; j < ga.cols; ++j) {
        ga.at(i, j) += self.grad.at(i, j) - std::exp(self.val.at(i, j)) * gsum;
      }
    }
  });
}

Graph::Var Graph::softplus_kappa(Var a) {
  const Tensor& av = val_of(a);
  Tensor y(av.rows, av.cols);
  for (std::size_t i = 0; i < av.size(); ++i) {
    y.v[i] = kKappaMax * std::tanh(stable_softplus(av.v[i]) / kKappaMax);
  }
  return push(std::move(y), [a](Graph& g, Node& self) {
    const Tensor& av = g.val_of(a);
    Tensor& ga = g.grad_of(a);
    for (std::size_t i = 0; i < av.size(); ++i) {
      double t = std::tanh(stable_softplus(av.v[i]) / kKappaMax);
      ga.v[i] += self.grad.v[i] * (1.0 - t * t) * sigmoid(av.v[i]);
    }
  });
}

Graph::Var Graph::clamp(Var a, double lo, double hi) {
  const Tensor& av = val_of(a);
  Tensor y = av;
  for (double& e : y.v) e = e < lo ? lo : (e > hi ? hi : e);
  return push(std::move(y), [a, lo, hi](Graph& g, Node& self) {
    const Tensor& av = g.val_of(a);
    Tensor& ga = g.grad_of(a);
    for (std::size_t i = 0; i < av.size(); ++i) {
      if (av.v[i] > lo && av.v[i] < hi) ga.v[i] += self.grad.v[i];
    }
  });
}

Graph::Var Graph::log_bessel_i0_elem(Var a) {
  const Tensor& av = val_of(a);
  Tensor y(av.rows, av.cols);
  for (std::size_t i = 0; i < av.size(); ++i) y.v[i] = log_bessel_i0(av.v[i]);
  return push(std::move(y), [a](Graph& g, Node& self) {
    const Tensor& av = g.val_of(a);
    Tensor& ga = g.grad_of(a);
    for (std::size_t i = 0; i < av.size(); ++i) {
      ga.v[i] += self.grad.v[i] * bessel_i1_over_i0(av.v[i]);
    }
  });
}

Graph::Var Graph::rowwise_dot(Var a, Var b) {
  const Tensor& av = val_of(a);
  const Tensor& bv = val_of(b);
  if (!av.same_shape(bv)) throw ShapeMismatch("rowwise_dot: shape mismatch");
  Tensor y(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < av.cols; ++j) acc += av.at(i, j) * bv.at(i, j);
    y.v[static_cast<std::size_t>(i)] = acc;
  }
  return push(std::move(y), [a, b](Graph& g, Node& self) {
    const Tensor& av = g.val_of(a);
    const Tensor& bv = g.val_of(b);
    Tensor& ga = g.grad_of(a);
    Tensor& gb = g.grad_of(b);
    for (int i = 0; i < av.rows; ++i) {
      double gy = self.grad.v[static_cast<std::size_t>(i)];
      for (int j = 0; j < av.cols; ++j) {
        ga.at(i, j) += gy * bv.at(i, j);
        gb.at(i, j) += gy * av.at(i, j);
      }
    }
  });
}

Graph::Var Graph::rowwise_sum(Var a) {
  const Tensor& av = val_of(a);
  Tensor y(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < av.cols; ++j) acc += av.at(i, j);
    y.v[static_cast<std::size_t>(i)] = acc;
  }
  return push(std::move(y), [a](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    for (int i = 0; i < ga.rows; ++i) {
      double gy = self.grad.v[static_cast<std::size_t>(i)];
      for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += gy;
    }
  });
}

Graph::Var Graph::logsumexp_rows(Var a) {
  const Tensor& av = val_of(a);
  Tensor y(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) {
    double m = av.at(i, 0);
    for (int j = 1; j < av.cols; ++j) m = std::max(m, av.at(i, j));
    double z = 0.0;
    for (int j = 0; j < av.cols; ++j) z += std::exp(av.at(i, j) - m);
    y.v[static_cast<std::size_t>(i)] = m + std::log(z);
  }
  return push(std::move(y), [a](Graph& g, Node& self) {
    const Tensor& av = g.val_of(a);
    Tensor& ga = g.grad_of(a);
    for (int i = 0; i < av.rows; ++i) {
      double gy = self.grad.v[static_cast<std::size_t>(i)];
      double lse = self.val.v[static_cast<std::size_t>(i)];
      for (int j = 0; j < av.cols; ++j) ga.at(i, j) += gy * std::exp(av.at(i, j) - lse);
    }
  });
}

Graph::Var Graph::mean_all(Var a) {
  const Tensor& av = val_of(a);
  double acc = 0.0;
  for (double e : av.v) acc += e;
  double inv = 1.0 / static_cast<double>(av.size());
  Tensor y(1, 1);
  y.v[0] = acc * inv;
  return push(std::move(y), [a, inv](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    double gy = self.grad.v[0] * inv;
    for (double& e : ga.v) e += gy;
  });
}

Graph::Var Graph::sum_all(Var a) {
  const Tensor& av = val_of(a);
  double acc = 0.0;
  for (double e : av.v) acc += e;
  Tensor y(1, 1);
  y.v[0] = acc;
  return push(std::move(y), [a](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    double gy = self.grad.v[0];
    for (double& e : ga.v) e += gy;
  });
}

void Graph::backward(Var root) {
  Node& r = nodes_[static_cast<std::size_t>(root)];
  if (r.val.rows != 1 || r.val.cols != 1) throw ShapeMismatch("backward: root is not scalar");
  r.grad.v[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.back) n.back(*this, n);
    if (n.bound_grad) {
      for (std::size_t k = 0; k < n.grad.size(); ++k) n.bound_grad->v[k] += n.grad.v[k];
    }
  }
}

}  // namespace vmreg
