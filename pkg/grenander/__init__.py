# smoothed Grenander-type estimators under random right censoring
