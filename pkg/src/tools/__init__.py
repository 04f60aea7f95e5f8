"""Identity-check suite and plotting templates"""
