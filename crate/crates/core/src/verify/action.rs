use crate::deform::{twist_action, PseudoMap};
use crate::dual::{Contragredient, DualVector};
use crate::error::Result;
use crate::fock::{AlgebraSpec, FockVector};
use crate::series::{Coeff, Exponent, ExtSeries};

/// A (possibly twisted) module action `Y_W(v, x) w`, lower-complete on `(-inf, x_hi]`.
pub trait ModuleAction: Sync {
    type Elem: Coeff;

    fn alg(&self) -> &AlgebraSpec;
    fn label(&self) -> String;
    fn act(&self, v: &FockVector, w: &Self::Elem, x_hi: Exponent) -> Result<ExtSeries<Self::Elem>>;
    /// The underlying Fock vector, for rendering and witnesses.
    fn state<'b>(&self, w: &'b Self::Elem) -> &'b FockVector;

    fn render(&self, w: &Self::Elem) -> String {
        self.alg().render(self.state(w))
    }
}

/// The ordinary action of `V` on a Fock or lattice module.
pub struct Untwisted<'a> {
    pub alg: &'a AlgebraSpec,
}

impl ModuleAction for Untwisted<'_> {
    type Elem = FockVector;

    fn alg(&self) -> &AlgebraSpec {
        self.alg
    }
    fn label(&self) -> String {
        "Y".into()
    }
    fn act(&self, v: &FockVector, w: &FockVector, x_hi: Exponent) -> Result<ExtSeries<FockVector>> {
        self.alg.vertex_series(v, w, x_hi)
    }
    fn state<'b>(&self, w: &'b FockVector) -> &'b FockVector {
        w
    }
}

/// `Y_W(Delta(x) v, x)`.
pub struct Deformed<'a> {
    pub alg: &'a AlgebraSpec,
    pub delta: PseudoMap,
}

impl ModuleAction for Deformed<'_> {
    type Elem = FockVector;

    fn alg(&self) -> &AlgebraSpec {
        self.alg
    }
    fn label(&self) -> String {
        format!("Y(({})(x) . , x)", self.delta.describe(self.alg))
    }
    fn act(&self, v: &FockVector, w: &FockVector, x_hi: Exponent) -> Result<ExtSeries<FockVector>> {
        twist_action(self.alg, &self.delta, v, w, x_hi)
    }
    fn state<'b>(&self, w: &'b FockVector) -> &'b FockVector {
        w
    }
}

/// The contragredient action `Y'` on the restricted dual.
pub struct Dual<'a> {
    pub contra: Contragredient<'a>,
}

impl ModuleAction for Dual<'_> {
    type Elem = DualVector;

    fn alg(&self) -> &AlgebraSpec {
        self.contra.alg
    }
    fn label(&self) -> String {
        format!("Y' (tilt {})", self.contra.omega.tilt)
    }
    fn act(&self, v: &FockVector, w: &DualVector, x_hi: Exponent) -> Result<ExtSeries<DualVector>> {
        self.contra.dual_vertex(v, w, x_hi)
    }
    fn state<'b>(&self, w: &'b DualVector) -> &'b FockVector {
        &w.0
    }
    fn render(&self, w: &DualVector) -> String {
        format!("dual({})", self.alg().render(&w.0))
    }
}
