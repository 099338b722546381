#include "scpinn/batch_tape.hpp"

namespace scpinn {

void BatchTape::backward(BVar root) {
  assert(root.tape == this);
  assert(value(root).size() == 1);
  adjoints_.assign(nodes_.size(), Eigen::ArrayXd());
  auto& radj = adjoints_[static_cast<std::size_t>(root.id)];
  radj = Eigen::ArrayXd::Ones(1);

  auto acc = [this](int id, const Eigen::ArrayXd& g) {
    Eigen::ArrayXd& a = adjoints_[static_cast<std::size_t>(id)];
    if (a.size() == 0)
      a = g;
    else
      a += g;
  };

  for (int i = root.id; i >= 0; --i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    const Eigen::ArrayXd& g = adjoints_[static_cast<std::size_t>(i)];
    if (g.size() == 0) continue;  // not on a path to the root
    switch (n.op) {
      case Op::Const:
      case Op::Leaf:
        break;
      case Op::Add:
        acc(n.a, g);
        acc(n.b, g);
        break;
      case Op::Sub:
        acc(n.a, g);
        acc(n.b, -g);
        break;
      case Op::Mul:
        acc(n.a, g * nodes_[static_cast<std::size_t>(n.b)].val);
        acc(n.b, g * nodes_[static_cast<std::size_t>(n.a)].val);
        break;
      case Op::Neg:
        acc(n.a, -g);
        break;
      case Op::ScaleC:
        acc(n.a, n.aux * g);
        break;
      case Op::AddC:
        acc(n.a, g);
        break;
      case Op::Mean: {
        const Eigen::Index len = nodes_[static_cast<std::size_t>(n.a)].val.size();
        acc(n.a, Eigen::ArrayXd::Constant(len, g[0] / static_cast<double>(len)));
        break;
      }
    }
  }
}

}  // namespace scpinn
