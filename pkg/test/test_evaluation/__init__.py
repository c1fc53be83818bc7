"""evaluation 测试"""
