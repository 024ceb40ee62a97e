use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-user parameters `(mu, A, B)` and the kernel decay `omega`.
///
/// `A` and `B` are `P x P`, stored row-major: `a(l, p)` is the effect of a past
/// use of product `l` on the intensity of product `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserParams<T> {
    pub mu: Vec<T>,
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub omega: T,
}

impl<T: Scalar> UserParams<T> {
    pub fn new(mu: Vec<T>, a: Vec<T>, b: Vec<T>, omega: T) -> Result<Self> {
        let params = UserParams { mu, a, b, omega };
        params.validate()?;
        Ok(params)
    }

    pub fn zeros(num_products: usize, omega: T) -> Self {
        UserParams {
            mu: vec![T::zero(); num_products],
            a: vec![T::zero(); num_products * num_products],
            b: vec![T::zero(); num_products * num_products],
            omega,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.mu.len();
        if self.a.len() != n * n || self.b.len() != n * n {
            return Err(Error::Shape(format!(
                "{n} products need {} matrix entries, got A={} B={}",
                n * n,
                self.a.len(),
                self.b.len()
            )));
        }
        if !(self.omega > T::zero() && self.omega.is_finite()) {
            return Err(Error::Domain(format!(
                "omega must be positive and finite, got {}",
                self.omega
            )));
        }
        if let Some(m) = self
            .mu
            .iter()
            .find(|m| !(m.is_finite() && **m >= T::zero()))
        {
            return Err(Error::Domain(format!(
                "base intensity must be finite and non-negative, got {m}"
            )));
        }
        if self.a.iter().chain(&self.b).any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite interaction weight".into()));
        }
        Ok(())
    }

    pub fn num_products(&self) -> usize {
        self.mu.len()
    }

    #[inline]
    pub fn a(&self, l: usize, p: usize) -> T {
        self.a[l * self.mu.len() + p]
    }

    #[inline]
    pub fn b(&self, l: usize, p: usize) -> T {
        self.b[l * self.mu.len() + p]
    }

    /// The parameters that drive `lambda_up` for one product `p`.
    pub fn row(&self, p: usize) -> ParamRow<T> {
        let n = self.num_products();
        ParamRow::new(
            self.mu[p],
            (0..n).map(|l| self.a(l, p)).collect(),
            (0..n).map(|l| self.b(l, p)).collect(),
        )
    }

    pub fn set_row(&mut self, p: usize, row: &ParamRow<T>) {
        let n = self.num_products();
        self.mu[p] = row.mu();
        for l in 0..n {
            self.a[l * n + p] = row.a()[l];
            self.b[l * n + p] = row.b()[l];
        }
    }

    /// All `(mu, A, B)` entries in a fixed order.
    pub fn entries(&self) -> impl Iterator<Item = T> + '_ {
        self.mu.iter().chain(&self.a).chain(&self.b).copied()
    }
}

/// Parameters of one `(u, p)` subproblem laid out as `[mu_p, a_{0p}..a_{P-1,p}, b_{0p}..b_{P-1,p}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamRow<T>(Vec<T>);

impl<T: Scalar> ParamRow<T> {
    pub fn new(mu: T, a: Vec<T>, b: Vec<T>) -> Self {
        assert_eq!(a.len(), b.len(), "A and B columns must have equal length");
        let mut v = Vec::with_capacity(1 + 2 * a.len());
        v.push(mu);
        v.extend(a);
        v.extend(b);
        ParamRow(v)
    }

    pub fn zeros(num_products: usize) -> Self {
        ParamRow(vec![T::zero(); 1 + 2 * num_products])
    }

    pub fn from_vec(v: Vec<T>) -> Result<Self> {
        if v.len() % 2 != 1 {
            return Err(Error::Shape(format!(
                "parameter row must have odd length 1 + 2P, got {}",
                v.len()
            )));
        }
        Ok(ParamRow(v))
    }

    pub fn num_products(&self) -> usize {
        (self.0.len() - 1) / 2
    }

    pub fn mu(&self) -> T {
        self.0[0]
    }

    pub fn a(&self) -> &[T] {
        &self.0[1..1 + self.num_products()]
    }

    pub fn b(&self) -> &[T] {
        &self.0[1 + self.num_products()..]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }
}

/// Parameters for every user; all users share one kernel decay.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    users: Vec<UserParams<T>>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(users: Vec<UserParams<T>>) -> Result<Self> {
        if let Some(first) = users.first() {
            let n = first.num_products();
            for u in &users {
                u.validate()?;
                if u.num_products() != n {
                    return Err(Error::Shape("users disagree on product count".into()));
                }
                if u.omega != first.omega {
                    return Err(Error::Domain(format!(
                        "all users must share omega ({} vs {})",
                        first.omega, u.omega
                    )));
                }
            }
        }
        Ok(ModelParams { users })
    }

    pub fn zeros(num_users: usize, num_products: usize, omega: T) -> Self {
        ModelParams {
            users: vec![UserParams::zeros(num_products, omega); num_users],
        }
    }

    pub fn users(&self) -> &[UserParams<T>] {
        &self.users
    }

    pub fn user(&self, u: usize) -> &UserParams<T> {
        &self.users[u]
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_products(&self) -> usize {
        self.users.first().map_or(0, UserParams::num_products)
    }

    pub fn omega(&self) -> Option<T> {
        self.users.first().map(|u| u.omega)
    }

    pub fn into_users(self) -> Vec<UserParams<T>> {
        self.users
    }
}
