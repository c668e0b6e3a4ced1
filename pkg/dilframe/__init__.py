"""dilframe - wavelet frames and coorbit diagnostics over matrix dilation groups."""
