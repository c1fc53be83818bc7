"""cli 测试"""
