//! Spectral and spatial transforms shared by the codecs and attacks.
//!
//! Scaling conventions: the FFT is unnormalized forward and `1/(H*W)` on the
//! inverse; the DCT and Haar DWT are orthonormal.

mod blur;
mod dct;
mod dwt;
mod fft;
mod jpeg;
mod resize;

pub use blur::{gaussian_blur, gaussian_blur_gray, gaussian_kernel, reflect_index};
pub use dct::{dct2, dct_basis, idct2, Block8Dct};
pub use dwt::{haar_dwt2, haar_idwt2, DwtPyramid};
pub use fft::{fft2, fft2_complex, ifft2, ifft2_complex, ComplexPlane};
pub use jpeg::{jpeg_proxy, jpeg_quant_table, LUMA_QUANT_BASE};
pub use resize::resize_bilinear;
