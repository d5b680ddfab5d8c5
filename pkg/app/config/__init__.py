# Config package for SMA solver service
