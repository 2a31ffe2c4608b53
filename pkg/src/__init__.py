"""eup-spectra: PT-symmetric extended momentum operators, their spectra and closed-form checks."""
