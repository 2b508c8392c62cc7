//! Graph-basis-function kernels defined through their Mercer weights on the
//! Laplacian eigenbasis.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::spectral::{gft, Direction, Spectrum};

#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// `exp(-t lambda_k)`
    Diffusion { t: f64 },
    /// `(eps + lambda_k)^(-s)`
    VariationalSpline { eps: f64, s: f64 },
    /// Mercer weights given directly, one per eigenvalue.
    CustomSpectral { coeffs: Vec<f64> },
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Diffusion { .. } => "diffusion",
            KernelFamily::VariationalSpline { .. } => "spline",
            KernelFamily::CustomSpectral { .. } => "custom",
        }
    }

    /// Spec string form; custom weights have no inline representation.
    pub fn spec(&self) -> Option<KernelSpec> {
        match self {
            KernelFamily::Diffusion { t } => Some(KernelSpec::Diffusion { t: *t }),
            KernelFamily::VariationalSpline { eps, s } => Some(KernelSpec::Spline { eps: *eps, s: *s }),
            KernelFamily::CustomSpectral { .. } => None,
        }
    }
}

/// Mercer weights of `family` on the eigenvalues `lambda`.
pub fn spectral_coefficients(family: &KernelFamily, lambda: &DVector<f64>) -> Result<DVector<f64>> {
    let coeffs: DVector<f64> = match family {
        KernelFamily::Diffusion { t } => lambda.map(|l| (-t * l).exp()),
        KernelFamily::VariationalSpline { eps, s } => {
            let mut out = DVector::zeros(lambda.len());
            for (index, (&l, slot)) in lambda.iter().zip(out.iter_mut()).enumerate() {
                let base = eps + l;
                if base == 0.0 {
                    return Err(Error::SplineSingularity { index });
                }
                if base < 0.0 && s.fract() != 0.0 {
                    return Err(Error::ComplexPower { index, base, s: *s });
                }
                *slot = base.powf(-s);
            }
            out
        }
        KernelFamily::CustomSpectral { coeffs } => {
            if coeffs.len() != lambda.len() {
                return Err(Error::Dimension {
                    expected: lambda.len(),
                    got: coeffs.len(),
                });
            }
            DVector::from_column_slice(coeffs)
        }
    };
    if let Some((index, &value)) = coeffs.iter().enumerate().find(|(_, c)| !c.is_finite()) {
        return Err(Error::NonFiniteCoefficient { index, value });
    }
    Ok(coeffs)
}

/// A kernel `K(v, w) = sum_k fhat_k u_k(v) u_k(w)` bound to a spectrum size.
#[derive(Debug, Clone)]
pub struct GbfKernel {
    family: KernelFamily,
    coeffs: DVector<f64>,
    floor: Option<f64>,
}

impl GbfKernel {
    pub fn new(family: KernelFamily, spectrum: &Spectrum) -> Result<Self> {
        let coeffs = spectral_coefficients(&family, spectrum.eigenvalues())?;
        Ok(GbfKernel {
            family,
            coeffs,
            floor: None,
        })
    }

    /// Replaces every Mercer weight by `max(fhat_k, floor)`.
    pub fn clamped(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0) || !floor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "spectrum floor must be positive, got {floor}"
            )));
        }
        self.coeffs.iter_mut().for_each(|c| *c = c.max(floor));
        self.floor = Some(floor);
        Ok(self)
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn clamp_floor(&self) -> Option<f64> {
        self.floor
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.coeffs.iter().all(|&c| c > 0.0)
    }

    pub fn min_coefficient(&self) -> f64 {
        self.coeffs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn require_positive_definite(&self) -> Result<()> {
        if self.is_positive_definite() {
            Ok(())
        } else {
            Err(Error::IndefiniteKernel(self.min_coefficient()))
        }
    }

    pub(crate) fn check(&self, s: &Spectrum, node: usize) -> Result<()> {
        if s.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: s.len(),
            });
        }
        if node >= s.len() {
            return Err(Error::InvalidNode { node, n: s.len() });
        }
        Ok(())
    }

    /// `K(v, w)`. Evaluated with the smaller id first so that `K(v, w)` and
    /// `K(w, v)` are bitwise equal.
    pub fn entry(&self, s: &Spectrum, v: usize, w: usize) -> f64 {
        let (a, b) = if v <= w { (v, w) } else { (w, v) };
        let ua = s.modes_at(a);
        let ub = s.modes_at(b);
        self.coeffs
            .iter()
            .zip(ua.iter().zip(ub))
            .map(|(f, (x, y))| f * x * y)
            .sum()
    }

    /// `K(v, w)` accumulated in double-double arithmetic, symmetric in the
    /// same way as [`GbfKernel::entry`].
    pub(crate) fn entry_extended(&self, s: &Spectrum, v: usize, w: usize) -> TwoFloat {
        let (a, b) = if v <= w { (v, w) } else { (w, v) };
        let ua = s.modes_at(a);
        let ub = s.modes_at(b);
        let mut acc = TwoFloat::from(0.0);
        for (&f, (&x, &y)) in self.coeffs.iter().zip(ua.iter().zip(ub)) {
            acc += TwoFloat::new_mul(f, x) * y;
        }
        acc
    }

    pub fn checked_entry(&self, s: &Spectrum, v: usize, w: usize) -> Result<f64> {
        self.check(s, v)?;
        self.check(s, w)?;
        Ok(self.entry(s, v, w))
    }

    /// `K(., w)` over all nodes.
    pub fn column(&self, s: &Spectrum, w: usize) -> Result<DVector<f64>> {
        self.check(s, w)?;
        Ok(DVector::from_iterator(
            s.len(),
            (0..s.len()).map(|v| self.entry(s, v, w)),
        ))
    }

    pub fn diagonal(&self, s: &Spectrum) -> Result<DVector<f64>> {
        if s.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: s.len(),
            });
        }
        Ok(DVector::from_iterator(
            s.len(),
            (0..s.len()).map(|v| self.entry(s, v, v)),
        ))
    }

    /// Kernel matrix restricted to `rows x cols`; `None` means all nodes.
    pub fn matrix(&self, s: &Spectrum, rows: Option<&[usize]>, cols: Option<&[usize]>) -> Result<DMatrix<f64>> {
        let all: Vec<usize> = (0..s.len()).collect();
        let rows = rows.unwrap_or(&all);
        let cols = cols.unwrap_or(&all);
        for &v in rows.iter().chain(cols) {
            self.check(s, v)?;
        }
        Ok(DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            self.entry(s, rows[i], cols[j])
        }))
    }

    pub fn full_matrix(&self, s: &Spectrum) -> Result<DMatrix<f64>> {
        self.matrix(s, None, None)
    }

    /// Native-space inner product `sum_k xhat_k yhat_k / fhat_k`.
    pub fn rkhs_inner(&self, s: &Spectrum, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        self.require_positive_definite()?;
        let xh = gft(s, x, Direction::Forward)?;
        let yh = gft(s, y, Direction::Forward)?;
        Ok(xh
            .iter()
            .zip(yh.iter())
            .zip(self.coeffs.iter())
            .map(|((a, b), f)| a * b / f)
            .sum())
    }

    pub fn rkhs_norm(&self, s: &Spectrum, x: &DVector<f64>) -> Result<f64> {
        Ok(self.rkhs_inner(s, x, x)?.max(0.0).sqrt())
    }
}

/// Textual kernel description used on the command line:
/// `diffusion:t=-10`, `spline:eps=0.01,s=-1`, `custom:file=coeffs.csv`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Diffusion { t: f64 },
    Spline { eps: f64, s: f64 },
    Custom { file: PathBuf },
}

impl KernelSpec {
    /// Resolves this kernel string into a family, reading custom coefficient files.
    pub fn family(&self) -> Result<KernelFamily> {
        Ok(match self {
            KernelSpec::Diffusion { t } => KernelFamily::Diffusion { t: *t },
            KernelSpec::Spline { eps, s } => KernelFamily::VariationalSpline { eps: *eps, s: *s },
            KernelSpec::Custom { file } => {
                let text = std::fs::read_to_string(file)?;
                KernelFamily::CustomSpectral {
                    coeffs: parse_coefficients(&text)?,
                }
            }
        })
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Diffusion { t } => write!(f, "diffusion:t={t}"),
            KernelSpec::Spline { eps, s } => write!(f, "spline:eps={eps},s={s}"),
            KernelSpec::Custom { file } => write!(f, "custom:file={}", file.display()),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let fail = |msg: String| Error::KernelSpec {
            spec: spec.to_string(),
            msg,
        };
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| fail("expected `kind:key=value,...`".into()))?;
        let mut params: Vec<(&str, &str)> = Vec::new();
        for part in rest.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| fail(format!("parameter {part:?} is not `key=value`")))?;
            let k = k.trim();
            if params.iter().any(|(seen, _)| *seen == k) {
                return Err(fail(format!("parameter `{k}` given twice")));
            }
            params.push((k, v.trim()));
        }
        let number = |key: &str| -> Result<f64> {
            let raw = params
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| fail(format!("missing parameter `{key}`")))?;
            raw.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| fail(format!("`{key}` is not a finite number: {raw:?}")))
        };
        let expect_keys = |keys: &[&str]| -> Result<()> {
            match params.iter().find(|(k, _)| !keys.contains(k)) {
                Some((k, _)) => Err(fail(format!("unknown parameter `{k}`"))),
                None => Ok(()),
            }
        };
        match kind.trim() {
            "diffusion" => {
                expect_keys(&["t"])?;
                Ok(KernelSpec::Diffusion { t: number("t")? })
            }
            "spline" => {
                expect_keys(&["eps", "s"])?;
                Ok(KernelSpec::Spline {
                    eps: number("eps")?,
                    s: number("s")?,
                })
            }
            "custom" => {
                expect_keys(&["file"])?;
                let file = params[0].1;
                if file.is_empty() {
                    return Err(fail("empty file name".into()));
                }
                Ok(KernelSpec::Custom { file: file.into() })
            }
            other => Err(fail(format!("unknown kernel kind {other:?}"))),
        }
    }
}

/// Reads Mercer weights separated by commas, whitespace or newlines; `#`
/// comments are ignored.
pub fn parse_coefficients(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        for tok in content
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            let x = tok
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    msg: format!("invalid coefficient {tok:?}"),
                })?;
            out.push(x);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, LaplacianKind};
    use crate::spectral::laplacian_spectrum;

    fn edge_spectrum() -> Spectrum {
        let g = Graph::new(2, [(0, 1, 1.0)]).unwrap();
        laplacian_spectrum(&g, LaplacianKind::Standard).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let lambda = DVector::from_vec(vec![0.0, 2.0]);
        let ones = spectral_coefficients(&KernelFamily::Diffusion { t: 0.0 }, &lambda).unwrap();
        assert_eq!(ones.as_slice(), &[1.0, 1.0]);
        let spline = spectral_coefficients(&KernelFamily::VariationalSpline { eps: 1.0, s: 1.0 }, &lambda).unwrap();
        assert_eq!(spline.as_slice(), &[1.0, 1.0 / 3.0]);
        let diff = spectral_coefficients(&KernelFamily::Diffusion { t: 1.0 }, &lambda).unwrap();
        assert_eq!(diff[0], 1.0);
        assert!((diff[1] - 0.135335283236613).abs() < 1e-12);
    }

    #[test]
    fn spline_preconditions() {
        let lambda = DVector::from_vec(vec![0.0, 2.0]);
        assert!(matches!(
            spectral_coefficients(&KernelFamily::VariationalSpline { eps: 0.0, s: 1.0 }, &lambda),
            Err(Error::SplineSingularity { index: 0 })
        ));
        assert!(matches!(
            spectral_coefficients(&KernelFamily::VariationalSpline { eps: -1.0, s: 0.5 }, &lambda),
            Err(Error::ComplexPower { index: 0, .. })
        ));
        // Integer exponents are fine on a negative base, but the result is indefinite.
        let c = spectral_coefficients(&KernelFamily::VariationalSpline { eps: -1.0, s: 1.0 }, &lambda).unwrap();
        assert_eq!(c.as_slice(), &[-1.0, 1.0]);
        assert!(matches!(
            spectral_coefficients(&KernelFamily::Diffusion { t: -1000.0 }, &lambda),
            Err(Error::NonFiniteCoefficient { index: 1, .. })
        ));
    }

    #[test]
    fn kernel_matrix_examples() {
        let s = edge_spectrum();
        let id = GbfKernel::new(KernelFamily::Diffusion { t: 0.0 }, &s).unwrap();
        assert!((id.full_matrix(&s).unwrap() - DMatrix::identity(2, 2)).amax() < 1e-10);

        let spline = GbfKernel::new(KernelFamily::VariationalSpline { eps: 1.0, s: 1.0 }, &s).unwrap();
        let k = spline.full_matrix(&s).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
        assert!((k - want).amax() < 1e-12);

        let diff = GbfKernel::new(KernelFamily::Diffusion { t: 1.0 }, &s).unwrap();
        let k = diff.full_matrix(&s).unwrap();
        assert!((k[(0, 0)] - 0.567667641618306).abs() < 1e-12);
        assert!((k[(0, 1)] - 0.432332358381694).abs() < 1e-12);

        assert!(matches!(diff.column(&s, 2), Err(Error::InvalidNode { node: 2, n: 2 })));
        let sub = diff.matrix(&s, Some(&[1]), Some(&[0, 1])).unwrap();
        assert_eq!(sub.shape(), (1, 2));
        assert_eq!(sub[(0, 0)], k[(1, 0)]);
    }

    #[test]
    fn positive_definiteness() {
        let s = edge_spectrum();
        let three = {
            let g = Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
            laplacian_spectrum(&g, LaplacianKind::Standard).unwrap()
        };
        for t in [-5.0, 0.0, 3.0] {
            assert!(GbfKernel::new(KernelFamily::Diffusion { t }, &s)
                .unwrap()
                .is_positive_definite());
        }
        let custom = GbfKernel::new(
            KernelFamily::CustomSpectral {
                coeffs: vec![1.0, 0.0, 2.0],
            },
            &three,
        )
        .unwrap();
        assert!(!custom.is_positive_definite());
        assert!(matches!(
            custom.rkhs_norm(&three, &DVector::zeros(3)),
            Err(Error::IndefiniteKernel(_))
        ));
        let clamped = custom.clamped(1e-14).unwrap();
        assert!(clamped.is_positive_definite());
        assert_eq!(clamped.coefficients()[1], 1e-14);
        assert!(
            GbfKernel::new(KernelFamily::VariationalSpline { eps: 1.0, s: 1.0 }, &three)
                .unwrap()
                .is_positive_definite()
        );
    }

    #[test]
    fn rkhs_norm_examples() {
        let s = edge_spectrum();
        let k = GbfKernel::new(KernelFamily::Diffusion { t: 1.0 }, &s).unwrap();
        let u2 = s.eigenvectors().column(1).into_owned();
        let norm = k.rkhs_norm(&s, &u2).unwrap();
        assert!((norm - 1.0 / (-2.0f64).exp().sqrt()).abs() < 1e-10);
        assert_eq!(k.rkhs_norm(&s, &DVector::zeros(2)).unwrap(), 0.0);

        // Independent route: the transform of (a, b) on this graph is ((a+b)/r2, (a-b)/r2).
        let (a, b) = (0.37, -1.25);
        let x = DVector::from_vec(vec![a, b]);
        let r2 = 2f64.sqrt();
        let want = (((a + b) / r2).powi(2) + ((a - b) / r2).powi(2) / (-2.0f64).exp()).sqrt();
        assert!((k.rkhs_norm(&s, &x).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn spec_strings() {
        assert_eq!(
            "diffusion:t=-10".parse::<KernelSpec>().unwrap(),
            KernelSpec::Diffusion { t: -10.0 }
        );
        assert_eq!(
            "spline:eps=0.01,s=-1".parse::<KernelSpec>().unwrap(),
            KernelSpec::Spline { eps: 0.01, s: -1.0 }
        );
        assert_eq!(
            "custom:file=coeffs.csv".parse::<KernelSpec>().unwrap(),
            KernelSpec::Custom {
                file: "coeffs.csv".into()
            }
        );
        for bad in [
            "",
            "diffusion",
            "diffusion:t=",
            "diffusion:t=1,t=2",
            "spline:eps=1",
            "heat:t=1",
            "diffusion:t=inf",
            "diffusion:x=1",
        ] {
            assert!(bad.parse::<KernelSpec>().is_err(), "{bad}");
        }
        let spec = KernelSpec::Spline { eps: 1e-6, s: -2.15 };
        assert_eq!(spec.to_string().parse::<KernelSpec>().unwrap(), spec);
    }

    #[test]
    fn coefficient_files() {
        assert_eq!(parse_coefficients("1, 2\n# c\n3e-1\n").unwrap(), vec![1.0, 2.0, 0.3]);
        assert!(matches!(
            parse_coefficients("1\nx\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
