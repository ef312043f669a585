//! Float math shim: std intrinsics when available, `libm` on `no_std`.

#[cfg(feature = "std")]
macro_rules! shim {
    ($name:ident, $libm:ident, 1) => {
        #[inline(always)]
        pub fn $name(x: f64) -> f64 {
            x.$name()
        }
    };
    ($name:ident, $libm:ident, 2) => {
        #[inline(always)]
        pub fn $name(x: f64, y: f64) -> f64 {
            x.$name(y)
        }
    };
}

#[cfg(not(feature = "std"))]
macro_rules! shim {
    ($name:ident, $libm:ident, 1) => {
        #[inline(always)]
        pub fn $name(x: f64) -> f64 {
            libm::$libm(x)
        }
    };
    ($name:ident, $libm:ident, 2) => {
        #[inline(always)]
        pub fn $name(x: f64, y: f64) -> f64 {
            libm::$libm(x, y)
        }
    };
}

shim!(exp, exp, 1);
shim!(ln, log, 1);
shim!(sqrt, sqrt, 1);
shim!(abs, fabs, 1);
shim!(floor, floor, 1);
shim!(round, round, 1);
shim!(sin, sin, 1);
shim!(cos, cos, 1);
shim!(hypot, hypot, 2);
shim!(atan2, atan2, 2);
