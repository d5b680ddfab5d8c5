# Domain layer for SMA solver service
