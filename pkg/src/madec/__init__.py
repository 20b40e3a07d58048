"""Decision-Estimation Coefficients for finite multi-agent decision problems."""
